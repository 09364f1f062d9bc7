#include "glyphformer/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glyphformer/error.hpp"

namespace glyphformer {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s = buf;
    if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string metrics_csv(const MetricsReport& report, const std::vector<std::string>& labels) {
    std::ostringstream out;
    out << "metric,value\n";
    out << "loss," << format_fixed(report.loss) << "\n";
    out << "acc," << format_fixed(report.accuracy) << "\n";
    out << "macro_f1," << format_fixed(report.macro_f1) << "\n";
    out << "w_f1," << format_fixed(report.weighted_f1) << "\n";
    out << "total," << report.total << "\n";
    for (std::size_t c = 0; c < report.per_class_f1.size(); ++c) {
        const std::string name = c < labels.size() ? labels[c] : std::to_string(c);
        out << csv_field("f1[" + name + "]") << "," << format_fixed(report.per_class_f1[c]) << "\n";
    }
    return out.str();
}

nlohmann::json to_json(const EpochLog& log) {
    return {{"epoch", log.epoch}, {"lr", log.lr}, {"train_loss", log.train_loss}, {"val_loss", log.val_loss}};
}

std::string train_log_jsonl(const std::vector<EpochLog>& log) {
    std::string out;
    for (const auto& e : log) out += to_json(e).dump() + "\n";
    return out;
}

std::string comparison_csv(const Comparison& cmp, bool use_final) {
    std::ostringstream out;
    out << "outline,loss,acc,macro_f1,w_f1\n";
    for (const auto& row : cmp.rows) {
        const MetricsReport& m = use_final ? row.final : row.best;
        out << to_string(row.representation) << "," << format_fixed(m.loss) << "," << format_fixed(m.accuracy) << ","
            << format_fixed(m.macro_f1) << "," << format_fixed(m.weighted_f1) << "\n";
    }
    return out.str();
}

nlohmann::json to_json(const Comparison& cmp) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : cmp.rows) {
        nlohmann::json log = nlohmann::json::array();
        for (const auto& e : row.log) log.push_back(to_json(e));
        rows.push_back({{"outline", to_string(row.representation)},
                        {"name", display_name(row.representation)},
                        {"best_epoch", row.best_epoch},
                        {"best", to_json(row.best, cmp.labels)},
                        {"final", to_json(row.final, cmp.labels)},
                        {"log", log}});
    }
    nlohmann::json stats = nlohmann::json::array();
    for (const auto& s : cmp.stats)
        stats.push_back({{"path", s.path},
                         {"codepoints", s.codepoints},
                         {"usable", s.usable},
                         {"selected", s.selected},
                         {"skipped_empty", s.skipped_empty},
                         {"skipped_too_long", s.skipped_too_long},
                         {"skipped_duplicate", s.skipped_duplicate},
                         {"skipped_invalid", s.skipped_invalid}});
    return {{"labels", cmp.labels}, {"majority_baseline", cmp.majority_baseline}, {"fonts", stats}, {"rows", rows}};
}

std::string comparison_table(const Comparison& cmp) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %8s %8s %9s %8s\n", "Outline", "Loss", "Acc.", "Macro F1", "W-F1");
    out << line;
    for (const auto& row : cmp.rows) {
        std::snprintf(line, sizeof line, "%-20s %8.4f %7.1f%% %9.4f %8.4f\n", display_name(row.representation).c_str(),
                      row.best.loss, 100.0 * row.best.accuracy, row.best.macro_f1, row.best.weighted_f1);
        out << line;
    }
    std::snprintf(line, sizeof line, "majority baseline: %.1f%%\n", 100.0 * cmp.majority_baseline);
    out << line;
    return out.str();
}

std::string confusion_svg(const MetricsReport& report, const std::vector<std::string>& labels,
                          const std::string& title) {
    const int k = static_cast<int>(report.confusion.size());
    const int cell = k <= 8 ? 48 : 28;
    const int left = 140, top = 60;
    const int width = left + k * cell + 40, height = top + k * cell + 130;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
        << "</text>\n";
    auto label = [&](int i) { return xml_escape(i < static_cast<int>(labels.size()) ? labels[i] : std::to_string(i)); };
    for (int t = 0; t < k; ++t) {
        std::int64_t support = 0;
        for (auto v : report.confusion[t]) support += v;
        for (int p = 0; p < k; ++p) {
            const std::int64_t v = report.confusion[t][p];
            // Row-normalized so classes with different support read alike.
            const double frac = support > 0 ? static_cast<double>(v) / static_cast<double>(support) : 0.0;
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
            char fill[16];
            std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
            const int x = left + p * cell, y = top + t * cell;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << fill << "\" stroke=\"#999\" stroke-width=\"0.5\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"" << (frac > 0.5 ? "white" : "black") << "\">"
                << v << "</text>\n";
        }
        svg << "<text x=\"" << left - 6 << "\" y=\"" << top + t * cell + cell / 2 + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << label(t) << "</text>\n";
    }
    for (int p = 0; p < k; ++p) {
        const int x = left + p * cell + cell / 2, y = top + k * cell + 8;
        svg << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"11\" transform=\"rotate(45 " << x << " " << y
            << ")\">" << label(p) << "</text>\n";
    }
    svg << "<text x=\"" << left + k * cell / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">predicted</text>\n";
    svg << "<text x=\"16\" y=\"" << top + k * cell / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
        << top + k * cell / 2 << ")\" text-anchor=\"middle\">true</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string loss_curves_svg(const std::vector<LossSeries>& series, const std::string& title) {
    const double width = 720, height = 440, left = 60, right = 190, top = 40, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;
    int max_epoch = 1;
    double max_loss = 0.0;
    for (const auto& s : series)
        for (const auto& e : s.log) {
            max_epoch = std::max(max_epoch, e.epoch);
            if (std::isfinite(e.train_loss)) max_loss = std::max(max_loss, e.train_loss);
            if (std::isfinite(e.val_loss)) max_loss = std::max(max_loss, e.val_loss);
        }
    if (max_loss <= 0.0) max_loss = 1.0;
    auto px = [&](double epoch) { return format_fixed(left + pw * epoch / max_epoch, 2); };
    auto py = [&](double loss) { return format_fixed(top + ph * (1.0 - loss / max_loss), 2); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
        << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double loss = max_loss * i / 4.0;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << py(loss) << "\" text-anchor=\"end\" font-size=\"10\">"
            << format_fixed(loss, 3) << "</text>\n";
        const double epoch = max_epoch * i / 4.0;
        svg << "<text x=\"" << px(epoch) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
            << format_fixed(epoch, 0) << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
    svg << "<text x=\"14\" y=\"" << top + ph / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << top + ph / 2 << ")\">loss</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % std::size(kPalette)];
        std::string train_pts, val_pts;
        for (const auto& e : series[i].log) {
            train_pts += px(e.epoch) + "," + py(e.train_loss) + " ";
            val_pts += px(e.epoch) + "," + py(e.val_loss) + " ";
        }
        if (!train_pts.empty()) {
            train_pts.pop_back();
            val_pts.pop_back();
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << train_pts
                << "\"/>\n";
            svg << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\" points=\"" << val_pts << "\"/>\n";
        }
        const double ly = top + 10 + 34.0 * static_cast<double>(i);
        const double lx = left + pw + 16;
        svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly << "\" stroke=\""
            << color << "\" stroke-width=\"1.5\"/>\n";
        svg << "<line x1=\"" << lx << "\" y1=\"" << ly + 14 << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly + 14
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"/>\n";
        svg << "<text x=\"" << lx + 30 << "\" y=\"" << ly + 4 << "\" font-size=\"10\">" << xml_escape(series[i].name)
            << " train</text>\n";
        svg << "<text x=\"" << lx + 30 << "\" y=\"" << ly + 18 << "\" font-size=\"10\">" << xml_escape(series[i].name)
            << " val</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace glyphformer
