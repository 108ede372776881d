#include "superdiff/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "superdiff/csv.hpp"
#include "superdiff/rgflow.hpp"
#include "superdiff/sim.hpp"
#include "superdiff/spectrum.hpp"
#include "superdiff/stats.hpp"

namespace sdiff {
namespace fs = std::filesystem;

namespace {

const double kLog3 = std::log(3.0);

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

std::optional<CsvTable> load(const fs::path& dir, const std::string& name, const std::vector<std::string>& cols) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) return std::nullopt;
    return read_csv(p.string(), cols);
}

int stamped_dim(const CsvTable& t) {
    auto it = t.stamp.extra.find("dim");
    return it == t.stamp.extra.end() ? 2 : std::stoi(it->second);
}

struct Series {
    std::string label;
    std::vector<double> x, y;
};

/// Minimal SVG line chart; `logx` plots log10(x).
std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, bool logx) {
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 55;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto tx = [&](double x) { return logx ? std::log10(x) : x; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (logx && s.x[i] <= 0)) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return ml + (tx(x) - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        const double X = ml + (W - ml - mr) * k / 4.0, Y = H - mb - (H - mt - mb) * k / 4.0;
        o << "<text x=\"" << X << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
          << (logx ? "1e" + num(xv, 3) : num(xv, 4)) << "</text>\n";
        o << "<text x=\"" << ml - 6 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">" << num(yv, 4) << "</text>\n";
    }
    o << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    o << "<text transform=\"translate(16," << (mt + H - mb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
      << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* c = colors[s % 5];
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!std::isfinite(series[s].y[i]) || (logx && series[s].x[i] <= 0)) continue;
            o << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
        }
        o << "\"/>\n";
        o << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 15 * s << "\" fill=\"" << c << "\">" << series[s].label
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

struct ScaleSummary {
    int m = 0;
    double sbar = 0, se = 0, sstar = 0;
    std::size_t samples = 0;
};

std::vector<ScaleSummary> summarize_cells(const CsvTable& t) {
    std::map<int, std::vector<double>> s, ss;
    const std::size_t cm = t.column("m"), c11 = t.column("s11"), c22 = t.column("s22");
    const std::size_t d11 = t.column("sstar11"), d22 = t.column("sstar22");
    for (const auto& r : t.rows) {
        const int m = static_cast<int>(std::lround(r[cm]));
        s[m].push_back(0.5 * (r[c11] + r[c22]));
        ss[m].push_back(0.5 * (r[d11] + r[d22]));
    }
    std::vector<ScaleSummary> out;
    for (const auto& [m, v] : s) {
        ScaleSummary x;
        x.m = m;
        x.sbar = mean(v);
        x.se = v.size() >= 2 ? standard_error(v) : 0.0;
        x.sstar = mean(ss[m]);
        x.samples = v.size();
        out.push_back(x);
    }
    return out;
}

}  // namespace

bool Report::all_pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const CriterionRow& r) { return r.pass; });
}

bool plots_available() {
#ifdef SUPERDIFF_WITH_PLOTS
    return true;
#else
    return false;
#endif
}

Report emit_report(const std::string& input_dir, const std::string& output_dir, const ReportOptions& opt) {
    const fs::path in(input_dir), out(output_dir);
    const auto cstar = load(in, "cstar.csv", columns::cstar);
    const auto cells = load(in, "cells.csv", columns::cells);
    const auto flowt = load(in, "flow.csv", columns::flow);
    const auto msd = load(in, "msd.csv", columns::msd);
    const auto exitt = load(in, "exit.csv", columns::exit);
    const auto moments = load(in, "moments.csv", columns::moments);

    Report rep;
    std::ostringstream md;
    std::ostringstream body;
    const bool plots = opt.write_plots && plots_available();
    fs::create_directories(out);
    auto add_plot = [&](const std::string& file, const std::string& svg) {
        if (!plots) return;
        std::ofstream f(out / file, std::ios::binary);
        f << svg;
        rep.plots.push_back(file);
        body << "\n![" << file << "](" << file << ")\n";
    };
    auto add = [&](std::string name, bool pass, std::string measured, std::string target) {
        rep.criteria.push_back({std::move(name), pass, std::move(measured), std::move(target)});
    };

    std::set<std::string> hashes;
    std::optional<std::uint64_t> seed;
    int dim = 2;
    for (const auto* t : {&cstar, &cells, &flowt, &msd, &exitt, &moments}) {
        if (!*t) continue;
        if ((*t)->has_stamp) hashes.insert((*t)->stamp.config_hash);
        if (!seed) seed = (*t)->stamp.seed;
        dim = stamped_dim(**t);
    }
    const double cf = cstar_closed_form(dim);
    std::optional<double> cstar_est;

    if (cstar && !cstar->rows.empty()) {
        const auto& r = cstar->rows.front();
        const double v = r[cstar->column("value")], c = r[cstar->column("closed_form")];
        cstar_est = v;
        const double rel = std::fabs(v - c) / c;
        body << "\n## Non-degeneracy constant\n\n| bands | samples | estimate | SE | 95% CI | closed form | rel. diff |\n"
                "|---|---|---|---|---|---|---|\n";
        body << "| " << num(r[0] + 1, 3) << ".." << num(r[1], 3) << " | " << num(r[2], 6) << " | " << num(v) << " | "
             << num(r[cstar->column("se")], 2) << " | [" << num(r[cstar->column("lo")]) << ", "
             << num(r[cstar->column("hi")]) << "] | " << num(c) << " | " << num(100 * rel, 3) << "% |\n";
        add("c* estimate vs closed form", rel <= opt.cstar_tolerance, num(v), num(c) + " within " + num(100 * opt.cstar_tolerance, 3) + "%");
    }

    std::vector<ScaleSummary> scales;
    if (cells && !cells->rows.empty()) {
        if (auto it = cells->stamp.extra.find("dim"); it != cells->stamp.extra.end()) dim = std::stoi(it->second);
        scales = summarize_cells(*cells);
        const double c = cstar_closed_form(2);
        body << "\n## Coarse-grained diffusivity\n\n| m | samples | s_bar | SE | s_star mean | asymptote sqrt(2 c* m log 3) |\n"
                "|---|---|---|---|---|---|\n";
        for (const auto& s : scales)
            body << "| " << s.m << " | " << s.samples << " | " << num(s.sbar) << " | " << num(s.se, 2) << " | "
                 << num(s.sstar) << " | " << num(asymptote(s.m, c)) << " |\n";
        if (scales.size() >= 2) {
            std::vector<double> x, y;
            bool increasing = true;
            for (std::size_t i = 0; i < scales.size(); ++i) {
                x.push_back(scales[i].m);
                y.push_back(scales[i].sbar * scales[i].sbar);
                if (i > 0) increasing = increasing && y[i] > y[i - 1];
            }
            const LinearFit fit = fit_line(x, y);
            const double target = 2.0 * c * kLog3;
            const bool ok = increasing && std::fabs(fit.slope - target) <= opt.growth_tolerance * target;
            body << "\nSlope of s_bar^2 against m: " << num(fit.slope) << " (target " << num(target) << ").\n";
            add("s_bar^2 growth in m", ok, "slope " + num(fit.slope) + (increasing ? ", increasing" : ", not increasing"),
                num(target) + " within " + num(100 * opt.growth_tolerance, 3) + "%");
            add_plot("sbar_growth.svg", svg_chart("s_bar^2 against m", "m", "s_bar^2", {{"cells", x, y}}, false));
        }
    }

    if (flowt && !flowt->rows.empty()) {
        const auto n = flowt->values("n"), sb = flowt->values("sbar"), as = flowt->values("asymptote"),
                   ratio = flowt->values("ratio");
        double dev = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) dev = std::max(dev, std::fabs(sb[i] - as[i]));
        body << "\n## Renormalization flow\n\n| n | s_bar | envelope | ratio |\n|---|---|---|---|\n";
        const std::size_t stride = std::max<std::size_t>(1, n.size() / 10);
        for (std::size_t i = 0; i < n.size(); i += stride)
            body << "| " << num(n[i], 8) << " | " << num(sb[i], 6) << " | " << num(as[i], 6) << " | " << num(ratio[i], 6) << " |\n";
        if ((n.size() - 1) % stride != 0)
            body << "| " << num(n.back(), 8) << " | " << num(sb.back(), 6) << " | " << num(as.back(), 6) << " | "
                 << num(ratio.back(), 6) << " |\n";
        if (!scales.empty()) {
            body << "\nCell estimates against the flow:\n\n| m | cell s_bar | flow s_bar |\n|---|---|---|\n";
            for (const auto& s : scales) {
                for (std::size_t i = 0; i < n.size(); ++i)
                    if (std::lround(n[i]) == s.m) body << "| " << s.m << " | " << num(s.sbar) << " | " << num(sb[i]) << " |\n";
            }
        }
        add("flow envelope deviation", dev <= opt.flow_tolerance, num(dev), "<= " + num(opt.flow_tolerance));
        add_plot("flow_ratio.svg", svg_chart("s_bar_n / envelope", "n", "ratio", {{"ratio", n, ratio}}, false));
    }

    if (msd && !msd->rows.empty()) {
        const auto t = msd->values("t"), m = msd->values("msd"), D = msd->values("D"), lo = msd->values("D_lo"),
                   hi = msd->values("D_hi");
        dim = stamped_dim(*msd);
        const double cuse = cstar_est.value_or(cf);
        body << "\n## Diffusivity\n\nPrediction uses c* = " << num(cuse) << (cstar_est ? " (estimated)" : " (closed form)")
             << ".\n\n| t | D(t) | 95% CI | msd/t | 2 d c* sqrt(log t) |\n|---|---|---|---|---|\n";
        for (std::size_t i = 0; i < t.size(); ++i)
            body << "| " << num(t[i]) << " | " << num(D[i]) << " | [" << num(lo[i]) << ", " << num(hi[i]) << "] | "
                 << num(m[i] / t[i]) << " | " << (t[i] > std::exp(1.0) ? num(diffusivity_prediction(t[i], cuse, dim)) : "-")
                 << " |\n";
        std::vector<double> fx, fy;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= opt.trend_from && t[i] > 1.0) {
                fx.push_back(std::sqrt(std::log(t[i])));
                fy.push_back(D[i]);
            }
        if (fx.size() >= 3) {
            const LinearFit fit = fit_line(fx, fy);
            body << "\nD(t) against sqrt(log t) for t >= " << num(opt.trend_from) << ": slope " << num(fit.slope)
                 << ", intercept " << num(fit.intercept) << ", R^2 " << num(fit.r_squared) << ".\n";
            add("superdiffusive trend", fit.slope > 0 && fit.r_squared >= opt.trend_min_r2,
                "slope " + num(fit.slope) + ", R^2 " + num(fit.r_squared), "slope > 0, R^2 >= " + num(opt.trend_min_r2));
        }
        add_plot("diffusivity.svg", svg_chart("D(t)", "t", "D", {{"D(t)", t, D}, {"lower", t, lo}, {"upper", t, hi}}, true));

        if (!scales.empty()) {
            EnsembleStats st;
            st.dim = dim;
            st.times = t;
            st.msd = m;
            const double plateau = plateau_diffusivity(st);
            const ScaleSummary& top = scales.back();
            const double a = 2.0 * dim * plateau, b = 2.0 * dim * top.sbar;
            const double rel = std::fabs(a - b) / b;
            body << "\n## Plateau cross-check\n\n| late-window msd slope 2 d D | 2 d s_bar (m = " << top.m
                 << ") | rel. diff |\n|---|---|---|\n| " << num(a) << " | " << num(b) << " | " << num(100 * rel, 3) << "% |\n";
            add("plateau vs cell s_bar", rel <= opt.plateau_tolerance, num(a),
                num(b) + " within " + num(100 * opt.plateau_tolerance, 3) + "%");
        }
    }

    if (exitt && !exitt->rows.empty()) {
        const auto t = exitt->values("t"), p = exitt->values("p_exit"), lo = exitt->values("lo"), hi = exitt->values("hi");
        const auto r = exitt->stamp.extra.count("radius") ? exitt->stamp.extra.at("radius") : std::string("?");
        body << "\n## Exit times (radius " << r << ")\n\n| t | P[T <= t] | 95% CI |\n|---|---|---|\n";
        for (std::size_t i = 0; i < t.size(); ++i)
            body << "| " << num(t[i]) << " | " << num(p[i]) << " | [" << num(lo[i]) << ", " << num(hi[i]) << "] |\n";
        bool monotone = true;
        for (std::size_t i = 1; i < p.size(); ++i) monotone = monotone && p[i] >= p[i - 1];
        add("exit probability at T", p.back() < opt.exit_max_probability && monotone, num(p.back()),
            "< " + num(opt.exit_max_probability));
    }

    if (moments && !moments->rows.empty()) {
        const auto t = moments->values("t"), kr = moments->values("kurtosis_ratio");
        const auto& ex = moments->stamp.extra;
        const double kmax = *std::max_element(kr.begin(), kr.end());
        body << "\n## Moment envelope\n\nFitted C2 = " << (ex.count("C2") ? ex.at("C2") : "?")
             << ", C4 = " << (ex.count("C4") ? ex.at("C4") : "?") << "; max E|X|^4/(E|X|^2)^2 = " << num(kmax) << ".\n";
        add("fourth-moment ratio", kmax <= 5.0, num(kmax), "<= 5");
        if (ex.count("envelope_ok")) add("moment envelope", ex.at("envelope_ok") == "1", "fitted C2, C4", "envelope holds at all t");
    }

    md << "# superdiff report\n\n";
    if (hashes.empty()) {
        md << "No artifacts found in `" << input_dir << "`.\n";
    } else {
        md << "Config hash: ";
        for (const auto& h : hashes) md << '`' << h << "` ";
        md << "\nSeed: " << (seed ? std::to_string(*seed) : "?") << "\n";
        add("artifact provenance", hashes.size() == 1,
            std::to_string(hashes.size()) + (hashes.size() == 1 ? " config hash" : " config hashes"), "a single hash");
    }
    md << "\n## Criteria\n\n";
    if (rep.criteria.empty()) {
        md << "No criteria evaluated.\n";
    } else {
        md << "| criterion | result | measured | target |\n|---|---|---|---|\n";
        for (const auto& c : rep.criteria)
            md << "| " << c.name << " | " << (c.pass ? "PASS" : "FAIL") << " | " << c.measured << " | " << c.target << " |\n";
    }
    md << body.str();
    rep.markdown = md.str();
    std::ofstream f(out / "report.md", std::ios::binary);
    f << rep.markdown;
    if (!f) throw std::runtime_error("failed writing report.md");
    return rep;
}

}  // namespace sdiff
