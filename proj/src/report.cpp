#include "gwel/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gwel/errors.hpp"

namespace gwel {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Curve {
    std::string label;
    std::vector<double> x, y;
};

// Minimal line plot: fixed viewport, linear axes, legend in the top-right.
std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Curve>& curves,
                       const std::vector<std::pair<std::string, double>>& h_lines = {}) {
    const double width = 640, height = 420;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& c : curves) {
        for (double v : c.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (double v : c.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    for (const auto& [label, y] : h_lines) {
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
    }
    if (x_min > x_max) {
        x_min = 0;
        x_max = 1;
    }
    if (y_min > y_max) {
        y_min = 0;
        y_max = 1;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    if (x_max - x_min < 1e-12) x_max = x_min + 1.0;

    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    auto sx = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * (width - ml - mr); };
    auto sy = [&](double v) {
        return height - mb - (v - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
        << "\" font-size=\"12\" transform=\"rotate(-90 16 " << (mt + height - mb) / 2 << ")\">"
        << y_label << "</text>\n";
    // endpoint tick labels
    svg << "<text x=\"" << ml << "\" y=\"" << height - mb + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(x_min) << "</text>\n";
    svg << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(x_max) << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << sy(y_min) << "\" font-size=\"10\" "
        << "text-anchor=\"end\">" << fmt(y_min) << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << sy(y_max) << "\" font-size=\"10\" "
        << "text-anchor=\"end\">" << fmt(y_max) << "</text>\n";

    for (const auto& [label, y] : h_lines) {
        svg << "<line x1=\"" << ml << "\" y1=\"" << sy(y) << "\" x2=\"" << width - mr
            << "\" y2=\"" << sy(y) << "\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n";
        svg << "<text x=\"" << width - mr - 4 << "\" y=\"" << sy(y) - 4
            << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#666\">" << label << "</text>\n";
    }

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < c.x.size(); ++k) {
            if (k) svg << ' ';
            svg << fmt(sx(c.x[k])) << ',' << fmt(sy(c.y[k]));
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << width - mr - 4 << "\" y=\"" << mt + 14 + 14 * i
            << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">" << c.label
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

json load_record(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const fs::path path = fs::path(run_dir) / "record.json";
    std::ifstream in(path);
    if (!in) throw MissingRun("no record.json under '" + run_dir + "'");
    json j;
    in >> j;
    return j;
}

std::string load_csv(const std::string& run_dir) {
    std::ifstream in(std::filesystem::path(run_dir) / "results.csv");
    if (!in) return {};
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

ReportFiles build_report(const std::vector<std::string>& run_dirs) {
    ReportFiles files;
    std::ostringstream md;
    md << "# Run report\n\n";

    std::vector<Curve> nx_curves, logfit_curves, logfit_refs_curves, rescaled_curves;
    std::vector<std::pair<std::string, double>> nx_refs;
    bool first_csv = true;

    for (const auto& dir : run_dirs) {
        const json rec = load_record(dir);
        const std::string id = rec.value("id", std::string("?"));
        const std::string mode = rec.value("mode", std::string("?"));
        const std::uint64_t seed = rec["provenance"].value("seed", std::uint64_t(0));
        md << "## Run `" << id << "` (" << mode << ", seed " << seed << ")\n\n";

        const std::string csv = load_csv(dir);
        if (!csv.empty()) {
            if (first_csv) {
                files.merged_csv = csv;
                first_csv = false;
            } else {
                const auto newline = csv.find('\n');
                files.merged_csv += csv.substr(newline + 1);
            }
        }

        if ((mode == "pool" || mode == "lambda") && rec.contains("trajectory")) {
            const double c1 = rec.contains("constants") ? rec["constants"].value("c1", 0.0) : 0.0;
            const double c4 = rec.contains("constants") ? rec["constants"].value("c4", 0.0) : 0.0;
            Curve nx{"seed " + std::to_string(seed), {}, {}};
            Curve lf = nx;
            for (const auto& step : rec["trajectory"]) {
                const int n = step["n"].get<int>();
                const double x = step["x"].get<double>();
                nx.x.push_back(n);
                nx.y.push_back(n * x);
                if (c1 > 0.0 && n >= 2) {
                    lf.x.push_back(std::log(static_cast<double>(n)));
                    lf.y.push_back(n * static_cast<double>(n) * (x - 1.0 / (c1 * n)));
                }
            }
            nx_curves.push_back(std::move(nx));
            if (c1 > 0.0) {
                nx_refs = {{"1/c1 = " + fmt(1.0 / c1), 1.0 / c1}};
                md << "- c1 = " << fmt(c1) << ", target n*x -> " << fmt(1.0 / c1) << "\n";
            }
            if (rec.contains("log_correction_fit")) {
                const auto& fit = rec["log_correction_fit"];
                const double slope = fit.value("slope", 0.0);
                const double intercept = fit.value("intercept", 0.0);
                const double ref_slope = c1 > 0 ? -c4 / (c1 * c1) : 0.0;
                md << "- fitted log-correction slope " << fmt(slope) << " (ci95 +/- "
                   << fmt(fit.value("slope_ci95", 0.0)) << "), reference -c4/c1^2 = "
                   << fmt(ref_slope) << "\n";
                if (!lf.x.empty()) {
                    // dashed-equivalent: a reference line with the predicted
                    // slope anchored at the fitted intercept
                    Curve ref{"ref slope " + fmt(ref_slope) + " (seed " +
                                  std::to_string(seed) + ")",
                              {lf.x.front(), lf.x.back()},
                              {intercept + ref_slope * lf.x.front(),
                               intercept + ref_slope * lf.x.back()}};
                    logfit_refs_curves.push_back(std::move(ref));
                }
            }
            if (!lf.x.empty()) logfit_curves.push_back(std::move(lf));
            if (rec.contains("c0")) {
                md << "- c0 estimate " << fmt(rec["c0"].value("value", 0.0)) << " +/- "
                   << fmt(rec["c0"].value("error", 0.0)) << " (cutoff "
                   << rec["c0"].value("cutoff", 0) << ")\n";
            }
            if (rec.contains("rescaled")) {
                Curve rs{"seed " + std::to_string(seed), {}, {}};
                int n = 1;
                for (const auto& v : rec["rescaled"]["values"]) {
                    rs.x.push_back(n++);
                    rs.y.push_back(v.get<double>());
                }
                md << "- rescaled sequence tail ratio deviation "
                   << fmt(rec["rescaled"].value("ratio_deviation", 0.0)) << "\n";
                rescaled_curves.push_back(std::move(rs));
            }
        } else if (mode == "tree" && rec.contains("depths")) {
            md << "| n | mean c_n | n*x_hat | mean w_hat | mad vs W | corr |\n";
            md << "|---|----------|---------|------------|----------|------|\n";
            for (const auto& entry : rec["depths"]) {
                md << "| " << entry["n"].get<int>() << " | "
                   << fmt(entry["c_n"]["mean"].get<double>()) << " | "
                   << fmt(entry["n_x_hat"].get<double>()) << " | "
                   << fmt(entry["w_hat"]["mean"].get<double>()) << " | "
                   << (entry.contains("norm_c_mad") ? fmt(entry["norm_c_mad"].get<double>())
                                                    : std::string("-"))
                   << " | "
                   << (entry.contains("norm_c_corr") ? fmt(entry["norm_c_corr"].get<double>())
                                                     : std::string("-"))
                   << " |\n";
            }
        } else if (mode == "oracle") {
            md << "- max relative difference vs Kirchhoff solve: "
               << fmt(rec.value("max_rel_diff_laplacian", 0.0)) << "\n";
            md << "- max relative difference vs series-parallel: "
               << fmt(rec.value("max_rel_diff_reduce", 0.0)) << "\n";
            md << "- max walk deviation (sigma): " << fmt(rec.value("max_walk_sigma", 0.0))
               << "\n";
        }
        md << "\n";
    }

    if (!nx_curves.empty())
        files.svgs["n_x_vs_n.svg"] =
            render_svg("n * x_n vs n", "n", "n * x_n", nx_curves, nx_refs);
    if (!logfit_curves.empty()) {
        std::vector<Curve> with_refs = logfit_curves;
        for (const auto& ref : logfit_refs_curves) with_refs.push_back(ref);
        files.svgs["log_correction.svg"] = render_svg(
            "n^2 (x_n - 1/(c1 n)) vs log n", "log n", "n^2 residual", with_refs);
    }
    if (!rescaled_curves.empty())
        files.svgs["rescaled.svg"] =
            render_svg("(lambda/m)^n * x_n", "n", "rescaled mean", rescaled_curves);

    files.markdown = md.str();
    return files;
}

void write_report(const ReportFiles& files, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "report.md") << files.markdown;
    std::ofstream(fs::path(out_dir) / "report.csv") << files.merged_csv;
    for (const auto& [name, svg] : files.svgs)
        std::ofstream(fs::path(out_dir) / name) << svg;
}

} // namespace gwel
