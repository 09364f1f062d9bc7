#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "glyphformer/font.hpp"

namespace glyphformer {

// The four outline representations on the TrueType -> PostScript ladder.
enum class Representation { OriginalTT, DecomposedTT, SegmentedTT, PostScript };

inline constexpr std::array<Representation, 4> kAllRepresentations = {
    Representation::OriginalTT, Representation::DecomposedTT, Representation::SegmentedTT,
    Representation::PostScript};

std::string_view to_string(Representation r);
// Accepts the CLI spellings: original, decomposed, segmented, postscript.
Representation parse_representation(std::string_view name);
bool is_point_form(Representation r);

enum class CommandKind : std::uint8_t { MoveTo = 0, LineTo = 1, QCurveTo = 2, CurveTo = 3, ClosePath = 4 };
inline constexpr int kNumCommandKinds = 5;

std::string_view to_string(CommandKind k);

enum class CurveOrder { Quadratic, Cubic };

// Filler for argument slots a command does not use.
inline constexpr double kPadArg = -1.0;

// Argument slots are (x1, y1, x2, y2, x, y). The command index is its
// position in CommandPath::commands.
struct Command {
    CommandKind kind = CommandKind::ClosePath;
    std::array<double, 6> args{kPadArg, kPadArg, kPadArg, kPadArg, kPadArg, kPadArg};

    static Command move_to(double x, double y);
    static Command line_to(double x, double y);
    static Command qcurve_to(double x1, double y1, double x, double y);
    static Command curve_to(double x1, double y1, double x2, double y2, double x, double y);
    static Command close_path();

    friend bool operator==(const Command&, const Command&) = default;
};

// Which of the six slots a command kind populates.
std::array<bool, 6> used_slots(CommandKind kind);

struct CommandPath {
    std::vector<Command> commands;
    CurveOrder curve_order = CurveOrder::Quadratic;

    friend bool operator==(const CommandPath&, const CommandPath&) = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Inserts the implied on-curve midpoint between every cyclically adjacent
// pair of off-curve points. The midpoint between the last and first point of
// a contour is appended at the end of that contour.
GlyphOutline decompose(const GlyphOutline& outline);

// Rotates a contour so that it starts on-curve. A contour with no on-curve
// point gets a synthetic start at the midpoint of its last and first points.
Contour normalize_start(const Contour& contour);

// Builds quadratic drawing commands from a decomposed outline. Contours are
// start-normalized here. Throws InvariantViolation on adjacent off-curve
// points.
CommandPath segment(const GlyphOutline& outline);

// Exact quadratic -> cubic conversion of every qCurveTo.
CommandPath elevate(const CommandPath& path);

// Builds the outline in any representation from raw glyf geometry.
GlyphOutline to_point_form(const GlyphOutline& original, Representation r);
CommandPath to_command_form(const GlyphOutline& original, Representation r);

// Throws InvariantViolation unless the path satisfies the command/slot rules.
void validate(const CommandPath& path);

// Uniform-parameter samples along every segment, both endpoints included.
std::vector<Vec2> sample_line(Vec2 p0, Vec2 p1, int samples);
std::vector<Vec2> sample_quadratic(Vec2 p0, Vec2 q, Vec2 p2, int samples);
std::vector<Vec2> sample_cubic(Vec2 p0, Vec2 c1, Vec2 c2, Vec2 p3, int samples);

// Point-form sampling follows the TrueType on/off convention including
// implicit midpoints; each contour starts at its first on-curve point (real or
// implied) and a straight closing edge of non-zero length is sampled last.
std::vector<Vec2> sample_points(const GlyphOutline& outline, int samples_per_segment);
// closePath samples the straight edge back to the subpath start when the
// current point is elsewhere.
std::vector<Vec2> sample_points(const CommandPath& path, int samples_per_segment);

// SVG path data with y flipped inside an em box of the given height.
std::string to_svg_path(const CommandPath& path, double em);
std::string format_number(double v);

}  // namespace glyphformer
