#include "pvt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "pvt/error.hpp"

namespace pvt {
namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string sanitize(const std::string& label) {
    std::string out;
    for (char c : label)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return out.empty() ? "curve" : out;
}

struct Csv {
    std::string body;
    void row(std::initializer_list<std::string> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) body += ',';
            body += c;
            first = false;
        }
        body += '\n';
    }
};

void write_file(const std::string& path, const std::string& body) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot write " + path);
    if (!body.empty()) std::fwrite(body.data(), 1, body.size(), f);
    std::fclose(f);
}

// --- tiny SVG builder -------------------------------------------------------

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Svg {
    std::string body;
    int width, height;

    Svg(int w, int h) : width(w), height(h) {
        body = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
               "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) +
               " " + std::to_string(h) + "\">\n";
        body += "<rect width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(h) +
                "\" fill=\"white\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width_px = 1.0) {
        body += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
                "\" y2=\"" + fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                fmt(width_px) + "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        body += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) body += fmt(x) + "," + fmt(y) + " ";
        body += "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill, double opacity = 1.0) {
        body += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) + "\" r=\"" + fmt(r) +
                "\" fill=\"" + fill + "\" fill-opacity=\"" + fmt(opacity) + "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start", double rotate = 0.0) {
        body += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\"" +
                " font-size=\"" + std::to_string(size) + "\" text-anchor=\"" + anchor + "\"";
        if (rotate != 0.0)
            body += " transform=\"rotate(" + fmt(rotate) + " " + fmt(x) + " " + fmt(y) + ")\"";
        body += ">" + s + "</text>\n";
    }
    std::string finish() { return body + "</svg>\n"; }
};

std::string render_det_svg(const std::vector<DetCurve>& curves) {
    const int W = 640, H = 480, L = 70, R = 160, T = 20, B = 50;
    Svg svg(W, H);

    // decade range over every finite point
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& c : curves)
        for (const auto& p : c.points)
            if (std::isfinite(p.hours_per_fa) && p.hours_per_fa > 0.0) {
                lo = std::min(lo, p.hours_per_fa);
                hi = std::max(hi, p.hours_per_fa);
            }
    if (!(hi > 0.0)) {  // nothing finite to draw
        lo = 0.1;
        hi = 10.0;
    }
    const double dlo = std::floor(std::log10(lo)), dhi = std::ceil(std::log10(hi));
    const double span = std::max(dhi - dlo, 1.0);
    auto px = [&](double h) { return L + (std::log10(h) - dlo) / span * (W - L - R); };
    auto py = [&](double frr) { return T + (1.0 - frr) * (H - T - B); };

    // frame and grid
    svg.line(L, T, L, H - B, "#000000");
    svg.line(L, H - B, W - R, H - B, "#000000");
    for (int d = static_cast<int>(dlo); d <= static_cast<int>(dhi); ++d) {
        const double x = px(std::pow(10.0, d));
        svg.line(x, T, x, H - B, "#dddddd");
        svg.text(x, H - B + 18, fmt(std::pow(10.0, d)), 11, "middle");
    }
    for (int i = 0; i <= 5; ++i) {
        const double frr = i / 5.0;
        svg.line(L, py(frr), W - R, py(frr), "#dddddd");
        svg.text(L - 8, py(frr) + 4, fmt(frr), 11, "end");
    }
    svg.text((L + W - R) / 2.0, H - 12, "hours per false alarm", 13, "middle");
    svg.text(16, (T + H - B) / 2.0, "false reject rate", 13, "middle", -90.0);

    int color = 0;
    for (const auto& c : curves) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : c.points)
            if (std::isfinite(p.hours_per_fa) && p.hours_per_fa > 0.0)
                pts.emplace_back(px(p.hours_per_fa), py(p.frr));
        const std::string stroke = kPalette[color % 8];
        if (!pts.empty()) svg.polyline(pts, stroke);
        const double ly = T + 16 + 18.0 * color;
        svg.line(W - R + 10, ly - 4, W - R + 34, ly - 4, stroke, 2.0);
        svg.text(W - R + 40, ly, c.context_label.empty() ? "curve" : c.context_label, 12);
        ++color;
    }
    return svg.finish();
}

std::string render_scatter_svg(const std::vector<PairScore>& pairs) {
    const int W = 520, H = 480, L = 60, R = 20, T = 20, B = 50;
    Svg svg(W, H);
    auto px = [&](double s) { return L + s * (W - L - R); };
    auto py = [&](double s) { return T + (1.0 - s) * (H - T - B); };

    svg.line(L, T, L, H - B, "#000000");
    svg.line(L, H - B, W - R, H - B, "#000000");
    for (int i = 0; i <= 5; ++i) {
        const double s = i / 5.0;
        svg.line(px(s), T, px(s), H - B, "#eeeeee");
        svg.line(L, py(s), W - R, py(s), "#eeeeee");
        svg.text(px(s), H - B + 18, fmt(s), 11, "middle");
        svg.text(L - 8, py(s) + 4, fmt(s), 11, "end");
    }
    svg.text((L + W - R) / 2.0, H - 12, "early score", 13, "middle");
    svg.text(16, (T + H - B) / 2.0, "late score", 13, "middle", -90.0);

    for (const auto& p : pairs)  // negatives under positives
        if (!p.positive) svg.circle(px(p.early), py(p.late), 2.5, "#d62728", 0.55);
    for (const auto& p : pairs)
        if (p.positive) svg.circle(px(p.early), py(p.late), 2.5, "#1f77b4", 0.55);

    svg.circle(L + 12, T + 12, 4, "#1f77b4");
    svg.text(L + 22, T + 16, "positive", 12);
    svg.circle(L + 12, T + 30, 4, "#d62728");
    svg.text(L + 22, T + 34, "negative", 12);
    return svg.finish();
}

}  // namespace

DetCurve det_curve(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                   double timeline_hours, const std::string& label) {
    if (pos_scores.empty() || neg_scores.empty())
        throw DataError("det_curve: empty score list");
    if (!(timeline_hours > 0.0)) throw DataError("det_curve: timeline_hours must be positive");

    std::vector<double> grid = pos_scores;
    grid.insert(grid.end(), neg_scores.begin(), neg_scores.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> pos = pos_scores, neg = neg_scores;
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());

    DetCurve curve;
    curve.context_label = label;
    for (double theta : grid) {
        DetPoint p;
        p.threshold = theta;
        p.frr = static_cast<double>(std::lower_bound(pos.begin(), pos.end(), theta) -
                                    pos.begin()) /
                pos.size();
        p.fa_count = neg.end() - std::lower_bound(neg.begin(), neg.end(), theta);
        p.hours_per_fa = p.fa_count > 0 ? timeline_hours / p.fa_count
                                        : std::numeric_limits<double>::infinity();
        curve.points.push_back(p);
    }
    return curve;
}

std::optional<double> frr_at_operating_point(const DetCurve& curve,
                                             double hours_per_fa_target) {
    for (const auto& p : curve.points)  // hours/FA is non-decreasing along the sweep
        if (p.hours_per_fa >= hours_per_fa_target) return p.frr;
    return std::nullopt;
}

std::optional<double> frr_at_fa_count(const DetCurve& curve, std::int64_t max_fa) {
    for (const auto& p : curve.points)
        if (p.fa_count <= max_fa) return p.frr;
    return std::nullopt;
}

DetCurve two_stage_det_at(const std::vector<PairScore>& pos_pairs,
                          const std::vector<PairScore>& neg_pairs, double timeline_hours,
                          double t_early) {
    auto combined = [t_early](const PairScore& p) {
        return p.early >= t_early ? p.early : p.late;
    };
    std::vector<double> pos, neg;
    pos.reserve(pos_pairs.size());
    neg.reserve(neg_pairs.size());
    for (const auto& p : pos_pairs) pos.push_back(combined(p));
    for (const auto& p : neg_pairs) neg.push_back(combined(p));
    return det_curve(pos, neg, timeline_hours, "two-stage");
}

DetCurve two_stage_det(const std::vector<PairScore>& pos_pairs,
                       const std::vector<PairScore>& neg_pairs, double timeline_hours,
                       double early_frr_target) {
    std::vector<double> early;
    early.reserve(pos_pairs.size());
    for (const auto& p : pos_pairs) early.push_back(p.early);
    const double t_early = calibrate_threshold(early, early_frr_target);
    return two_stage_det_at(pos_pairs, neg_pairs, timeline_hours, t_early);
}

std::vector<std::string> emit_reports(const std::vector<DetCurve>& curves,
                                      const std::vector<PairScore>& pairs,
                                      const PolicyReport* policy, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::string& body) {
        const std::string path = out_dir + "/" + name;
        write_file(path, body);
        files.push_back(path);
    };

    if (curves.empty()) std::fprintf(stderr, "warning: no DET curves to emit\n");
    for (const auto& c : curves) {
        Csv csv;
        csv.row({"threshold", "frr", "fa_count", "hours_per_fa"});
        for (const auto& p : c.points)
            csv.row({fmt(p.threshold), fmt(p.frr), std::to_string(p.fa_count),
                     fmt(p.hours_per_fa)});
        emit("det_" + sanitize(c.context_label) + ".csv", csv.body);
    }
    if (!curves.empty()) emit("det.svg", render_det_svg(curves));

    if (!pairs.empty()) {
        Csv csv;
        csv.row({"utterance_id", "label", "early", "late"});
        for (const auto& p : pairs)
            csv.row({std::to_string(p.utterance_id), p.positive ? "positive" : "negative",
                     fmt(p.early), fmt(p.late)});
        emit("scatter.csv", csv.body);
        emit("scatter.svg", render_scatter_svg(pairs));
    }

    if (policy) {
        Csv csv;
        csv.row({"outcome", "count", "latency_s"});
        csv.row({"accept_early", std::to_string(policy->n_early), fmt(policy->early_context_s)});
        csv.row({"accept_late", std::to_string(policy->n_late), fmt(policy->late_context_s)});
        csv.row({"mean", std::to_string(policy->n_early + policy->n_late),
                 policy->mean_latency_s ? fmt(*policy->mean_latency_s) : ""});
        emit("latency.csv", csv.body);
        emit("policy.json", policy->to_json() + "\n");
    }
    return files;
}

}  // namespace pvt
