#include "stepsize/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "stepsize/landscape.hpp"

namespace stepsize {

namespace {

constexpr double kWidth = 840.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 180.0;  // legend strip
constexpr double kTop = 50.0;
constexpr double kBottom = 64.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                                    "#bcbd22", "#e377c2"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
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

// Maps a data interval onto a pixel interval (pixels may run downward).
struct Mapper {
    double lo = 0.0;
    double hi = 1.0;
    double px0 = 0.0;
    double px1 = 1.0;

    double operator()(double v) const {
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

struct Svg {
    explicit Svg(double w = kWidth, double h = kHeight) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double stroke = 1.0) {
        body += "<line x1=\"" + px(x1) + "\" y1=\"" + px(y1) + "\" x2=\"" + px(x2) +
                "\" y2=\"" + px(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" +
                px(stroke) + "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double stroke = 1.5) {
        if (pts.size() < 2) return;
        body += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                px(stroke) + "\" points=\"";
        for (const auto& [x, y] : pts) body += px(x) + "," + px(y) + " ";
        body += "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              bool crisp = false) {
        body += "<rect x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(w) +
                "\" height=\"" + px(h) + "\" fill=\"" + fill + "\"";
        if (crisp) body += " shape-rendering=\"crispEdges\"";
        body += "/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill,
                const std::string& stroke = "none") {
        body += "<circle cx=\"" + px(cx) + "\" cy=\"" + px(cy) + "\" r=\"" + px(r) +
                "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
    }

    void square(double cx, double cy, double r, const std::string& fill) {
        rect(cx - r, cy - r, 2 * r, 2 * r, fill);
    }

    void diamond(double cx, double cy, double r, const std::string& fill,
                 const std::string& stroke) {
        body += "<path d=\"M " + px(cx) + " " + px(cy - r) + " L " + px(cx + r) + " " +
                px(cy) + " L " + px(cx) + " " + px(cy + r) + " L " + px(cx - r) + " " +
                px(cy) + " Z\" fill=\"" + fill + "\" stroke=\"" + stroke +
                "\" stroke-width=\"1.5\"/>\n";
    }

    void text(double x, double y, const std::string& s, const std::string& anchor = "start",
              double size = 12.0, bool vertical = false, const std::string& color = "#000000") {
        body += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-family=\"sans-serif\"" +
                " font-size=\"" + px(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" +
                color + "\"";
        if (vertical) {
            body += " transform=\"rotate(-90 " + px(x) + " " + px(y) + ")\"";
        }
        body += ">" + xml_escape(s) + "</text>\n";
    }

    std::string finish() const {
        std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) +
               "\" height=\"" + px(height) + "\" viewBox=\"0 0 " + px(width) + " " +
               px(height) + "\">\n";
        out += "<rect x=\"0\" y=\"0\" width=\"" + px(width) + "\" height=\"" + px(height) +
               "\" fill=\"#ffffff\"/>\n";
        out += body;
        out += "</svg>\n";
        return out;
    }

    std::string body;
    double width;
    double height;
};

void save(const Svg& svg, const std::filesystem::path& out_svg) {
    std::ofstream out(out_svg, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + out_svg.string() + "'");
    out << svg.finish();
    if (!out) throw DataError("write failed for '" + out_svg.string() + "'");
}

std::vector<double> linear_ticks(double lo, double hi) {
    const double range = hi - lo;
    if (!(range > 0.0) || !std::isfinite(range)) return {lo};
    double step = std::pow(10.0, std::floor(std::log10(range / 4.0)));
    const double r = range / 4.0 / step;
    if (r >= 5.0) {
        step *= 5.0;
    } else if (r >= 2.0) {
        step *= 2.0;
    }
    std::vector<double> ticks;
    double v = std::ceil(lo / step - 1e-9) * step;
    while (v <= hi + step * 1e-9) {
        ticks.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
        v += step;
    }
    return ticks;
}

std::string tick_label(double v) { return format_double(v); }

// Decade ticks over a log10-transformed axis; returns exponents.
std::vector<int> decade_ticks(double elo, double ehi) {
    int lo = static_cast<int>(std::ceil(elo - 1e-9));
    int hi = static_cast<int>(std::floor(ehi + 1e-9));
    if (hi < lo) {
        lo = static_cast<int>(std::floor(elo));
        hi = lo + 1;
    }
    const int step = std::max(1, (hi - lo + 7) / 8);
    std::vector<int> ticks;
    for (int e = lo; e <= hi; e += step) ticks.push_back(e);
    return ticks;
}

std::string exponent_label(int e) {
    if (e == 0) return "1";
    return "1e" + std::to_string(e);
}

struct Frame {
    Mapper mx;
    Mapper my;
};

Frame begin_frame(Svg& svg, double xlo, double xhi, double ylo, double yhi) {
    if (xhi <= xlo) {
        const double pad = xlo == 0.0 ? 1.0 : std::abs(xlo) * 0.1;
        xlo -= pad;
        xhi += pad;
    }
    if (yhi <= ylo) {
        const double pad = ylo == 0.0 ? 1.0 : std::abs(ylo) * 0.1;
        ylo -= pad;
        yhi += pad;
    }
    Frame f;
    f.mx = Mapper{xlo, xhi, kLeft, svg.width - kRight};
    f.my = Mapper{ylo, yhi, svg.height - kBottom, kTop};
    return f;
}

void draw_axes(Svg& svg, const Frame& f, const std::string& x_label,
               const std::string& y_label, const std::string& title) {
    const double x0 = f.mx.px0, x1 = f.mx.px1;
    const double y0 = f.my.px0, y1 = f.my.px1;
    svg.line(x0, y0, x1, y0, "#000000");
    svg.line(x0, y0, x0, y1, "#000000");
    svg.text((x0 + x1) / 2, svg.height - 14, x_label, "middle", 13);
    svg.text(22, (y0 + y1) / 2, y_label, "middle", 13, true);
    if (!title.empty()) svg.text((x0 + x1) / 2, kTop - 22, title, "middle", 15);
}

void draw_linear_x_ticks(Svg& svg, const Frame& f) {
    for (const double v : linear_ticks(f.mx.lo, f.mx.hi)) {
        const double x = f.mx(v);
        svg.line(x, f.my.px0, x, f.my.px0 + 5, "#000000");
        svg.text(x, f.my.px0 + 18, tick_label(v), "middle", 11);
    }
}

void draw_linear_y_ticks(Svg& svg, const Frame& f) {
    for (const double v : linear_ticks(f.my.lo, f.my.hi)) {
        const double y = f.my(v);
        svg.line(f.mx.px0 - 5, y, f.mx.px0, y, "#000000");
        svg.text(f.mx.px0 - 8, y + 4, tick_label(v), "end", 11);
    }
}

void draw_decade_x_ticks(Svg& svg, const Frame& f) {
    for (const int e : decade_ticks(f.mx.lo, f.mx.hi)) {
        const double x = f.mx(static_cast<double>(e));
        svg.line(x, f.my.px0, x, f.my.px0 + 5, "#000000");
        svg.text(x, f.my.px0 + 18, exponent_label(e), "middle", 11);
    }
}

void draw_decade_y_ticks(Svg& svg, const Frame& f) {
    for (const int e : decade_ticks(f.my.lo, f.my.hi)) {
        const double y = f.my(static_cast<double>(e));
        svg.line(f.mx.px0 - 5, y, f.mx.px0, y, "#000000");
        svg.text(f.mx.px0 - 8, y + 4, exponent_label(e), "end", 11);
    }
}

void legend_entry(Svg& svg, std::size_t slot, const std::string& color,
                  const std::string& label) {
    const double x = svg.width - kRight + 16;
    const double y = kTop + 16 + 20 * static_cast<double>(slot);
    svg.line(x, y - 4, x + 22, y - 4, color, 2.5);
    svg.text(x + 28, y, label, "start", 12);
}

// Splits a series at non-finite points so gaps stay visible.
void draw_series(Svg& svg, const Frame& f, const std::vector<double>& xs,
                 const std::vector<double>& ys, const std::string& color,
                 bool markers = false) {
    std::vector<std::pair<double, double>> segment;
    auto flush = [&] {
        if (segment.size() >= 2) svg.polyline(segment, color);
        if (segment.size() == 1) svg.circle(segment[0].first, segment[0].second, 2.5, color);
        segment.clear();
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            flush();
            continue;
        }
        segment.emplace_back(f.mx(xs[i]), f.my(ys[i]));
        if (markers) svg.circle(f.mx(xs[i]), f.my(ys[i]), 2.8, color);
    }
    flush();
}

std::string viridis(double t) {
    static constexpr double stops[][3] = {
        {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
        {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
        {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
        {0.134692, 0.658636, 0.517649}, {0.266941, 0.748751, 0.440573},
        {0.477504, 0.821444, 0.318195}, {0.741388, 0.873449, 0.149561},
        {0.993248, 0.906157, 0.143936},
    };
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * 10.0;
    const std::size_t i = std::min<std::size_t>(9, static_cast<std::size_t>(pos));
    const double frac = pos - static_cast<double>(i);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<unsigned>(
                      std::lround(255.0 * (stops[i][0] + frac * (stops[i + 1][0] - stops[i][0])))),
                  static_cast<unsigned>(
                      std::lround(255.0 * (stops[i][1] + frac * (stops[i + 1][1] - stops[i][1])))),
                  static_cast<unsigned>(
                      std::lround(255.0 * (stops[i][2] + frac * (stops[i + 1][2] - stops[i][2])))));
    return buf;
}

std::vector<double> cell_edges(const std::vector<double>& axis) {
    const std::size_t n = axis.size();
    std::vector<double> e(n + 1);
    if (n == 1) {
        e[0] = axis[0] - 0.5;
        e[1] = axis[0] + 0.5;
        return e;
    }
    e[0] = axis[0] - (axis[1] - axis[0]) / 2.0;
    for (std::size_t i = 1; i < n; ++i) e[i] = (axis[i - 1] + axis[i]) / 2.0;
    e[n] = axis[n - 1] + (axis[n - 1] - axis[n - 2]) / 2.0;
    return e;
}

}  // namespace

void plot_line(const std::filesystem::path& trace_csv, const std::filesystem::path& out_svg,
               const PlotOptions& options) {
    const RunRecord rec = read_trace_csv(trace_csv);

    struct Series {
        std::string name;
        std::vector<double> y;
    };
    std::vector<Series> series;
    const std::size_t n = rec.sample_steps.size();
    const std::size_t d = rec.sample_alphas.empty() ? 0 : rec.sample_alphas.front().size();
    for (std::size_t i = 0; i < d; ++i) {
        Series s;
        s.name = d == 1 ? "alpha" : "alpha_" + std::to_string(i);
        s.y.reserve(n);
        for (const auto& alpha : rec.sample_alphas) s.y.push_back(alpha[i]);
        series.push_back(std::move(s));
    }
    if (!rec.sample_alpha_stars.empty()) series.push_back({"alpha_star", rec.sample_alpha_stars});
    if (!rec.sample_sigmas.empty()) series.push_back({"sigma", rec.sample_sigmas});
    if (series.empty()) series.push_back({"loss", rec.sample_losses});

    std::vector<double> xs;
    xs.reserve(n);
    for (const std::uint64_t step : rec.sample_steps) xs.push_back(static_cast<double>(step));

    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -std::numeric_limits<double>::infinity();
    for (const Series& s : series) {
        for (const double v : s.y) {
            if (!std::isfinite(v)) continue;
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    if (!(ylo <= yhi)) {
        throw DataError("line plot: '" + trace_csv.string() + "' has no finite values");
    }
    const double pad = (yhi - ylo) * 0.05;

    Svg svg;
    const Frame f = begin_frame(svg, xs.front(), xs.back(), ylo - pad, yhi + pad);
    draw_axes(svg, f, "step", series.size() == 1 ? series[0].name : "value",
              options.title.empty() ? trace_csv.stem().string() : options.title);
    draw_linear_x_ticks(svg, f);
    draw_linear_y_ticks(svg, f);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string color = series[i].name == "alpha_star"
                                      ? "#000000"
                                      : kPalette[i % kPaletteSize];
        draw_series(svg, f, xs, series[i].y, color);
        legend_entry(svg, i, color, series[i].name);
    }
    save(svg, out_svg);
}

void plot_trajectory_heatmap(const std::filesystem::path& landscape_csv,
                             const std::vector<std::filesystem::path>& trajectory_csvs,
                             const std::filesystem::path& out_svg,
                             const PlotOptions& options) {
    const LandscapeGrid grid = read_landscape_csv(landscape_csv);

    // Resolve every input before emitting anything.
    std::vector<std::vector<std::pair<double, double>>> trajectories;
    for (const auto& path : trajectory_csvs) {
        RunRecord rec = read_trace_csv(path);
        trajectories.push_back(trajectory_overlay(rec));
    }

    std::vector<double> finite;
    for (const auto& row : grid.loss) {
        for (const double l : row) {
            if (std::isfinite(l)) finite.push_back(l);
        }
    }

    double cmin = 0.0, cmax = 1.0;
    bool log_color = false;
    if (!finite.empty()) {
        std::sort(finite.begin(), finite.end());
        cmin = finite.front();
        const double q = std::clamp(options.clip_percentile, 0.0, 100.0) / 100.0;
        cmax = finite[static_cast<std::size_t>(q * static_cast<double>(finite.size() - 1))];
        if (cmax <= cmin) cmax = cmin + 1.0;
        log_color = cmin > 0.0;
    }
    auto color_of = [&](double l) -> std::string {
        if (!std::isfinite(l)) return "#cccccc";
        double t;
        if (log_color) {
            t = (std::log10(l) - std::log10(cmin)) / (std::log10(cmax) - std::log10(cmin));
        } else {
            t = (l - cmin) / (cmax - cmin);
        }
        return viridis(1.0 - t);  // low loss bright, high loss dark
    };

    const std::vector<double> ex = cell_edges(grid.alpha1_axis);
    const std::vector<double> ey = cell_edges(grid.alpha2_axis);

    Svg svg(kWidth, 640.0);
    const Frame f = begin_frame(svg, ex.front(), ex.back(), ey.front(), ey.back());
    draw_axes(svg, f, "alpha_1", "alpha_2",
              options.title.empty() ? "loss over step-size space" : options.title);
    draw_linear_x_ticks(svg, f);
    draw_linear_y_ticks(svg, f);

    for (std::size_t i = 0; i < grid.loss.size(); ++i) {
        for (std::size_t j = 0; j < grid.loss[i].size(); ++j) {
            const double x = f.mx(ex[j]);
            const double w = f.mx(ex[j + 1]) - x;
            const double y = f.my(ey[i + 1]);
            const double h = f.my(ey[i]) - y;
            svg.rect(x, y, w, h, color_of(grid.loss[i][j]), true);
        }
    }

    // Clip trajectories to the heatmap area.
    svg.body += "<defs><clipPath id=\"plotarea\"><rect x=\"" + px(f.mx.px0) + "\" y=\"" +
                px(f.my.px1) + "\" width=\"" + px(f.mx.px1 - f.mx.px0) + "\" height=\"" +
                px(f.my.px0 - f.my.px1) + "\"/></clipPath></defs>\n";
    svg.body += "<g clip-path=\"url(#plotarea)\">\n";
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const std::string color = kPalette[k % kPaletteSize];
        std::vector<std::pair<double, double>> pts;
        pts.reserve(trajectories[k].size());
        for (const auto& [a1, a2] : trajectories[k]) {
            if (std::isfinite(a1) && std::isfinite(a2)) pts.emplace_back(f.mx(a1), f.my(a2));
        }
        svg.polyline(pts, color, 2.0);
        if (!pts.empty()) {
            svg.circle(pts.front().first, pts.front().second, 4.0, "#ffffff", color);
            svg.square(pts.back().first, pts.back().second, 3.5, color);
        }
    }
    svg.body += "</g>\n";

    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        legend_entry(svg, k, kPalette[k % kPaletteSize], trajectory_csvs[k].stem().string());
    }

    if (!finite.empty()) {
        bool found = false;
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid.loss.size(); ++i) {
            for (std::size_t j = 0; j < grid.loss[i].size(); ++j) {
                const double l = grid.loss[i][j];
                if (!std::isfinite(l)) continue;
                if (!found || l < best || (l == best && (j < bj || (j == bj && i < bi)))) {
                    found = true;
                    best = l;
                    bi = i;
                    bj = j;
                }
            }
        }
        svg.diamond(f.mx(grid.alpha1_axis[bj]), f.my(grid.alpha2_axis[bi]), 7.0, "#000000",
                    "#ffffff");
        legend_entry(svg, trajectories.size(), "#000000", "argmin");
    }
    save(svg, out_svg);
}

void plot_sweep_curve(const std::filesystem::path& summary_csv,
                      const std::filesystem::path& out_svg, const PlotOptions& options) {
    const SweepTable table = read_summary_csv(summary_csv);
    if (table.rows.empty()) {
        throw DataError("sweep_curve: '" + summary_csv.string() + "' has no data rows");
    }

    std::string x_param = options.x_param;
    if (x_param.empty()) {
        for (const SweepRow& row : table.rows) {
            if (!row.params.empty()) {
                x_param = row.params.front().first;
                break;
            }
        }
        if (x_param.empty()) throw DataError("sweep_curve: no hyperparameter columns");
    }

    // Seed-average each (algorithm, params) point, keyed in first-seen order.
    struct Point {
        Algorithm algorithm;
        std::vector<std::pair<std::string, double>> params;
        double sum = 0.0;
        std::size_t count = 0;
    };
    std::vector<Point> points;
    for (const SweepRow& row : table.rows) {
        Point* found = nullptr;
        for (Point& p : points) {
            if (p.algorithm == row.algorithm && p.params == row.params) {
                found = &p;
                break;
            }
        }
        if (found == nullptr) {
            points.push_back(Point{row.algorithm, row.params, 0.0, 0});
            found = &points.back();
        }
        found->sum += row.mean_loss;
        ++found->count;
    }

    // Per algorithm: best (lowest) mean loss at each x value.
    struct SeriesData {
        Algorithm algorithm;
        std::vector<std::pair<double, double>> xy;  // (x, best mean loss)
    };
    std::vector<SeriesData> series;
    for (const Point& p : points) {
        double x = 0.0;
        bool has_x = false;
        for (const auto& [name, value] : p.params) {
            if (name == x_param) {
                x = value;
                has_x = true;
                break;
            }
        }
        if (!has_x || !(x > 0.0)) continue;
        const double mean = p.sum / static_cast<double>(p.count);
        SeriesData* sd = nullptr;
        for (SeriesData& s : series) {
            if (s.algorithm == p.algorithm) {
                sd = &s;
                break;
            }
        }
        if (sd == nullptr) {
            series.push_back(SeriesData{p.algorithm, {}});
            sd = &series.back();
        }
        bool merged = false;
        for (auto& [sx, sy] : sd->xy) {
            if (sx == x) {
                sy = std::min(sy, mean);
                merged = true;
                break;
            }
        }
        if (!merged) sd->xy.emplace_back(x, mean);
    }

    double exlo = std::numeric_limits<double>::infinity(), exhi = -exlo;
    double eylo = exlo, eyhi = -exlo;
    for (SeriesData& s : series) {
        std::sort(s.xy.begin(), s.xy.end());
        for (const auto& [x, y] : s.xy) {
            exlo = std::min(exlo, std::log10(x));
            exhi = std::max(exhi, std::log10(x));
            if (std::isfinite(y) && y > 0.0) {
                eylo = std::min(eylo, std::log10(y));
                eyhi = std::max(eyhi, std::log10(y));
            }
        }
    }
    if (!(exlo <= exhi) || !(eylo <= eyhi)) {
        throw DataError("sweep_curve: no finite points for hyperparameter '" + x_param + "'");
    }

    Svg svg;
    const Frame f = begin_frame(svg, exlo - 0.2, exhi + 0.2, eylo - 0.15, eyhi + 0.15);
    draw_axes(svg, f, x_param, "mean loss",
              options.title.empty() ? "lifetime loss vs " + x_param : options.title);
    draw_decade_x_ticks(svg, f);
    draw_decade_y_ticks(svg, f);

    for (std::size_t k = 0; k < series.size(); ++k) {
        std::vector<double> xs, ys;
        xs.reserve(series[k].xy.size());
        ys.reserve(series[k].xy.size());
        for (const auto& [x, y] : series[k].xy) {
            xs.push_back(std::log10(x));
            ys.push_back(std::isfinite(y) && y > 0.0 ? std::log10(y)
                                                     : std::numeric_limits<double>::quiet_NaN());
        }
        const std::string color = kPalette[k % kPaletteSize];
        draw_series(svg, f, xs, ys, color, true);
        legend_entry(svg, k, color, to_string(series[k].algorithm));
    }
    save(svg, out_svg);
}

}  // namespace stepsize
