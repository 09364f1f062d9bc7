#include "doctest.h"

#include "glyphformer/metrics.hpp"
#include "glyphformer/report.hpp"

using namespace glyphformer;

namespace {

Comparison fake_comparison() {
    Comparison c;
    c.labels = {"a", "b"};
    c.majority_baseline = 0.5;
    for (auto r : kAllRepresentations) {
        FormatResult row;
        row.representation = r;
        row.best = compute_metrics(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 0}, 2, 0.25);
        row.final = row.best;
        row.log = {{1, 1e-4, 0.7, 0.69}, {2, 2e-4, 0.5, 0.6}};
        c.rows.push_back(row);
    }
    return c;
}

}  // namespace

TEST_CASE("comparison CSV mirrors the table layout") {
    const std::string csv = comparison_csv(fake_comparison());
    CHECK(csv.rfind("outline,loss,acc,macro_f1,w_f1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.find("postscript,0.250000,0.666667,") != std::string::npos);
    CHECK(comparison_table(fake_comparison()).find("PostScript") != std::string::npos);
}

TEST_CASE("metrics CSV and log lines") {
    const auto m = compute_metrics(std::vector<int>{0, 1}, std::vector<int>{0, 1}, 2, 0.0);
    const std::string csv = metrics_csv(m, {"x,y", "z"});
    CHECK(csv.find("acc,1.000000\n") != std::string::npos);
    CHECK(csv.find("\"f1[x,y]\",1.000000") != std::string::npos);
    const std::string log = train_log_jsonl({{1, 0.5, 1.0, 2.0}});
    CHECK(nlohmann::json::parse(log).at("val_loss") == 2.0);
}

TEST_CASE("SVG output is deterministic and escaped") {
    const auto c = fake_comparison();
    const auto a = confusion_svg(c.rows[0].best, {"<a>", "b&c"}, "t");
    CHECK(a == confusion_svg(c.rows[0].best, {"<a>", "b&c"}, "t"));
    CHECK(a.find("&lt;a&gt;") != std::string::npos);
    CHECK(a.find("b&amp;c") != std::string::npos);
    const auto l = loss_curves_svg({{"one", c.rows[0].log}, {"two", c.rows[1].log}}, "loss");
    CHECK(l.find("<polyline") != std::string::npos);
    CHECK(l.rfind("<svg", 0) == 0);
    CHECK(format_fixed(-0.0000001) == "0.000000");
}
