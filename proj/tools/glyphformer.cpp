#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "glyphformer/checkpoint.hpp"
#include "glyphformer/error.hpp"
#include "glyphformer/experiment.hpp"
#include "glyphformer/font.hpp"
#include "glyphformer/outline.hpp"
#include "glyphformer/report.hpp"
#include "glyphformer/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace glyphformer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitMismatch = 4;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DivergenceDetected:
        case ErrorKind::NonFiniteActivation: return kExitDiverged;
        case ErrorKind::ConfigMismatch: return kExitMismatch;
        case ErrorKind::InvariantViolation:
        case ErrorKind::ShapeMismatch: return kExitInternal;
        default: return kExitInput;
    }
}

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string preset;
};

// Accepts U+0041, 0x41, a decimal number or a single ASCII character.
char32_t parse_codepoint(const std::string& s) {
    try {
        if (s.size() > 2 && (s[0] == 'U' || s[0] == 'u') && s[1] == '+') return std::stoul(s.substr(2), nullptr, 16);
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) return std::stoul(s.substr(2), nullptr, 16);
        if (s.size() == 1 && !std::isdigit(static_cast<unsigned char>(s[0]))) return static_cast<unsigned char>(s[0]);
        return std::stoul(s, nullptr, 10);
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, "cannot parse codepoint '" + s + "'");
    }
}

std::string codepoint_label(char32_t cp) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
    return buf;
}

Manifest load_manifest(const std::string& path, const GlobalOptions& g) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, "manifest " + path + " is not valid JSON: " + e.what());
    }
    // Command-line settings take the place of the manifest's own.
    if (!g.preset.empty()) j["preset"] = g.preset;
    if (g.seed) j["seed"] = *g.seed;
    return Manifest::from_json(j, fs::path(path).parent_path());
}

int run_inspect(const std::string& font_path, const std::string& glyph, const std::string& svg_path,
                const GlobalOptions& g) {
    const FontFile font = FontFile::load(font_path);
    std::size_t n_codepoints = 0;
    try {
        n_codepoints = font.list_codepoints().size();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnsupportedCmap) throw;
        std::cerr << "warning: " << e.what() << "\n";
    }
    std::cout << "glyphs: " << font.num_glyphs() << ", codepoints: " << n_codepoints << ", upm: " << font.units_per_em()
              << "\n";
    if (glyph.empty()) return kExitOk;

    const char32_t cp = parse_codepoint(glyph);
    const auto gid = font.char_to_glyph(cp);
    if (!gid) throw Error(ErrorKind::InvalidArgument, codepoint_label(cp) + " is not mapped in " + font_path);
    const GlyphOutline outline = font.glyph_outline(*gid);
    std::cout << codepoint_label(cp) << " glyph " << *gid << "\n";
    for (Representation r : kAllRepresentations) {
        std::cout << "  " << to_string(r) << ": ";
        if (is_point_form(r)) {
            const GlyphOutline pf = to_point_form(outline, r);
            std::size_t on = 0;
            for (const auto& c : pf.contours)
                for (const auto& p : c) on += p.on_curve;
            std::cout << "contours=" << pf.contours.size() << " points=" << pf.point_count() << " on_curve=" << on
                      << "\n";
        } else {
            const CommandPath path = to_command_form(outline, r);
            std::size_t curves = 0;
            for (const auto& c : path.commands) curves += c.kind == CommandKind::QCurveTo || c.kind == CommandKind::CurveTo;
            std::cout << "commands=" << path.commands.size() << " curves=" << curves << "\n";
        }
    }
    if (!svg_path.empty()) {
        const CommandPath ps = to_command_form(outline, Representation::PostScript);
        const double em = font.units_per_em();
        std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + format_number(em) + " " +
                          format_number(em) + "\">\n<path fill-rule=\"nonzero\" d=\"" + to_svg_path(ps, em) +
                          "\"/>\n</svg>\n";
        fs::path out = svg_path;
        if (out.is_relative()) out = fs::path(g.out_dir) / out;
        write_text(out, svg);
        std::cerr << "wrote " << out.string() << "\n";
    }
    return kExitOk;
}

int run_convert(const std::string& font_path, const std::string& format, const std::string& out_path,
                const GlobalOptions& g) {
    const Representation r = parse_representation(format);
    const FontFile font = FontFile::load(font_path);
    const QuantizerConfig q = QuantizerConfig::for_font(font);
    fs::path out = out_path;
    if (out.is_relative()) out = fs::path(g.out_dir) / out;
    std::string text;
    std::size_t written = 0, skipped = 0;
    for (char32_t cp : font.list_codepoints()) {
        const std::uint32_t gid = *font.char_to_glyph(cp);
        try {
            const GlyphOutline outline = font.glyph_outline(gid);
            if (outline.empty()) {
                ++skipped;
                std::cerr << "skip " << codepoint_label(cp) << ": empty outline\n";
                continue;
            }
            TokenRecord rec{font_path, cp, encode_glyph(outline, r, q)};
            text += to_json(rec).dump() + "\n";
            ++written;
        } catch (const Error& e) {
            ++skipped;
            std::cerr << "skip " << codepoint_label(cp) << ": " << e.what() << "\n";
        }
    }
    write_text(out, text);
    std::cerr << "wrote " << written << " records to " << out.string() << " (" << skipped << " skipped)\n";
    return kExitOk;
}

void log_epoch(const std::string& tag, const EpochLog& e) {
    std::fprintf(stderr, "%sepoch %d lr %.3g train %.4f val %.4f\n", tag.c_str(), e.epoch, e.lr, e.train_loss,
                 e.val_loss);
}

void write_metrics(const fs::path& dir, const std::string& stem, const MetricsReport& m,
                   const std::vector<std::string>& labels, const std::string& title) {
    write_text(dir / (stem + ".csv"), metrics_csv(m, labels));
    write_text(dir / (stem + ".json"), to_json(m, labels).dump(2) + "\n");
    write_text(dir / ("confusion_" + stem + ".svg"), confusion_svg(m, labels, title));
}

int run_train(const std::string& manifest_path, const std::string& representation, const GlobalOptions& g) {
    Manifest m = load_manifest(manifest_path, g);
    if (!representation.empty()) m.representation = parse_representation(representation);
    const Dataset data = build_dataset(m);
    const EncoderConfig enc = encoder_for(m, data);
    std::cerr << "train " << to_string(m.representation) << ": " << data.train.size() << "/" << data.val.size() << "/"
              << data.test.size() << " glyphs, " << data.labels.size() << " classes\n";
    const fs::path dir = g.out_dir;
    fs::create_directories(dir);
    TrainResult tr;
    try {
        tr = train(data, enc, m.training, m.seed, [](const EpochLog& e) { log_epoch("", e); });
    } catch (const DivergenceError& e) {
        save_checkpoint(dir / "checkpoint_last_good.ckpt", e.last_good());
        throw;
    }
    save_checkpoint(dir / "checkpoint_best.ckpt", tr.best);
    save_checkpoint(dir / "checkpoint_final.ckpt", tr.final);
    write_text(dir / "train_log.jsonl", train_log_jsonl(tr.log));
    write_text(dir / "metrics_train.csv", metrics_csv(evaluate(tr.final, data, Split::Train), data.labels));
    write_text(dir / "metrics_val.csv", metrics_csv(evaluate(tr.best, data, Split::Val), data.labels));
    write_text(dir / "loss_curves.svg",
               loss_curves_svg({{display_name(m.representation), tr.log}}, "Loss, " + display_name(m.representation)));
    std::cerr << "best epoch " << tr.best_epoch << "; wrote checkpoints to " << dir.string() << "\n";
    return kExitOk;
}

int run_eval(const std::string& manifest_path, const std::string& checkpoint_path, const std::string& split_name,
             const std::string& representation, const GlobalOptions& g) {
    Manifest m = load_manifest(manifest_path, g);
    if (!representation.empty()) m.representation = parse_representation(representation);
    const Split split = parse_split(split_name);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Dataset data = build_dataset(m);
    const MetricsReport report = evaluate(ckpt, data, split);
    for (int c : report.absent_classes)
        std::cerr << "class '" << data.labels[c] << "' absent from " << split_name << " split; excluded from macro F1\n";
    const std::string stem = "metrics_" + split_name;
    write_metrics(g.out_dir, stem, report, data.labels,
                  "Confusion, " + display_name(data.representation) + " (" + split_name + ")");
    std::cout << "loss " << format_fixed(report.loss, 4) << " acc " << format_fixed(report.accuracy, 4) << " macro_f1 "
              << format_fixed(report.macro_f1, 4) << " w_f1 " << format_fixed(report.weighted_f1, 4) << "\n";
    return kExitOk;
}

int run_compare(const std::string& manifest_path, const GlobalOptions& g) {
    const Manifest m = load_manifest(manifest_path, g);
    const Comparison cmp = compare_formats(m, [](Representation r, const EpochLog& e) {
        log_epoch(std::string(to_string(r)) + " ", e);
    });
    const fs::path dir = g.out_dir;
    write_text(dir / "comparison.csv", comparison_csv(cmp));
    write_text(dir / "comparison_final.csv", comparison_csv(cmp, true));
    write_text(dir / "comparison.json", to_json(cmp).dump(2) + "\n");
    std::vector<LossSeries> series;
    for (const auto& row : cmp.rows) {
        series.push_back({display_name(row.representation), row.log});
        write_text(dir / ("train_log_" + std::string(to_string(row.representation)) + ".jsonl"),
                   train_log_jsonl(row.log));
        write_text(dir / ("confusion_" + std::string(to_string(row.representation)) + ".svg"),
                   confusion_svg(row.best, cmp.labels, "Confusion, " + display_name(row.representation)));
    }
    write_text(dir / "loss_curves.svg", loss_curves_svg(series, "Train and validation loss"));
    std::cout << comparison_table(cmp);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Glyph outline classification across TrueType and PostScript representations"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the manifest)");
    app.add_option("--out-dir", g.out_dir, "Directory for output files");
    app.add_option("--preset", g.preset, "Hyperparameter profile")->check(CLI::IsMember({"paper", "desk"}));

    std::string font_path, glyph, svg_path, format, out_path, manifest_path, checkpoint_path, representation;
    std::string split_name = "test";

    auto* inspect = app.add_subcommand("inspect", "Summarize a font or one glyph");
    inspect->add_option("font", font_path)->required();
    inspect->add_option("--glyph", glyph, "Codepoint, e.g. U+0041");
    inspect->add_option("--svg", svg_path, "Write the glyph's PostScript path as SVG");

    auto* convert = app.add_subcommand("convert", "Dump token records for every usable glyph");
    convert->add_option("font", font_path)->required();
    convert->add_option("--format", format)->required()->check(
        CLI::IsMember({"original", "decomposed", "segmented", "postscript"}));
    convert->add_option("--out", out_path)->required();

    const auto repr_check = CLI::IsMember({"original", "decomposed", "segmented", "postscript"});
    auto* train_cmd = app.add_subcommand("train", "Train on one representation");
    train_cmd->add_option("manifest", manifest_path)->required();
    train_cmd->add_option("--representation", representation)->check(repr_check);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("manifest", manifest_path)->required();
    eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
    eval_cmd->add_option("--split", split_name)->check(CLI::IsMember({"train", "val", "test"}));
    eval_cmd->add_option("--representation", representation)->check(repr_check);

    auto* compare = app.add_subcommand("compare", "Train and test all four representations");
    compare->add_option("manifest", manifest_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*inspect) return run_inspect(font_path, glyph, svg_path, g);
        if (*convert) return run_convert(font_path, format, out_path, g);
        if (*train_cmd) return run_train(manifest_path, representation, g);
        if (*eval_cmd) return run_eval(manifest_path, checkpoint_path, split_name, representation, g);
        if (*compare) return run_compare(manifest_path, g);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
