#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocularage/errors.hpp"
#include "ocularage/metrics.hpp"

namespace ocularage {

inline constexpr int kReportSchemaVersion = 1;

// Midpoints of the 4-6 / 7-9 / 10-12 / 13-16 bins, used as chart x positions.
inline constexpr std::array<double, 4> kAgeBinMidpoints = {5.0, 8.0, 11.0, 14.5};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out.flush()) throw IoError("failed writing: " + path);
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json class_report_json(const ClassReport& r) {
    return {{"accuracy", r.accuracy},
            {"precision_young", r.precision[0]},
            {"precision_old", r.precision[1]},
            {"recall_young", r.recall[0]},
            {"recall_old", r.recall[1]},
            {"f1_young", r.f1[0]},
            {"f1_old", r.f1[1]},
            {"macro_f1", r.macro_f1},
            // rows = truth (young, old), columns = prediction
            {"confusion", {{r.confusion[0][0], r.confusion[0][1]},
                           {r.confusion[1][0], r.confusion[1][1]}}},
            {"n", r.n}};
}

inline nlohmann::json reg_report_json(const RegReport& r) {
    return {{"mae", r.mae},
            {"rmse", r.rmse},
            {"within_1yr", r.within_1yr},
            {"within_2yr", r.within_2yr},
            {"n", r.n}};
}

inline nlohmann::json age_bin_report_json(const AgeBinReport& r) {
    nlohmann::json bins = nlohmann::json::array();
    for (size_t b = 0; b < r.bins.size(); ++b) {
        nlohmann::json j = reg_report_json(r.bins[b]);
        j["bin"] = kAgeBinLabels[b];
        bins.push_back(std::move(j));
    }
    return bins;
}

inline nlohmann::json confidence_curve_json(const ConfidenceCurve& c) {
    nlohmann::json points = nlohmann::json::array();
    for (int i = 0; i < 13; ++i)
        points.push_back({{"age", kMinAge + i},
                          {"mean_confidence", c.mean_confidence[static_cast<size_t>(i)]},
                          {"count", c.count[static_cast<size_t>(i)]}});
    return points;
}

inline nlohmann::json cross_sensor_delta_json(const CrossSensorDelta& d) {
    return {{"accuracy_drop", d.accuracy_drop}, {"mae_increase", d.mae_increase}};
}

namespace detail {

inline void csv_metric_row(std::ostream& out, const char* name, double v) {
    out << name << ',' << v << '\n';
}

} // namespace detail

inline std::string classification_csv(const ClassReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "metric,value\n";
    detail::csv_metric_row(out, "accuracy", r.accuracy);
    detail::csv_metric_row(out, "precision_young", r.precision[0]);
    detail::csv_metric_row(out, "precision_old", r.precision[1]);
    detail::csv_metric_row(out, "recall_young", r.recall[0]);
    detail::csv_metric_row(out, "recall_old", r.recall[1]);
    detail::csv_metric_row(out, "f1_young", r.f1[0]);
    detail::csv_metric_row(out, "f1_old", r.f1[1]);
    detail::csv_metric_row(out, "macro_f1", r.macro_f1);
    out << "confusion_young_young," << r.confusion[0][0] << '\n';
    out << "confusion_young_old," << r.confusion[0][1] << '\n';
    out << "confusion_old_young," << r.confusion[1][0] << '\n';
    out << "confusion_old_old," << r.confusion[1][1] << '\n';
    out << "n," << r.n << '\n';
    return out.str();
}

inline std::string regression_csv(const RegReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "metric,value\n";
    detail::csv_metric_row(out, "mae", r.mae);
    detail::csv_metric_row(out, "rmse", r.rmse);
    detail::csv_metric_row(out, "within_1yr", r.within_1yr);
    detail::csv_metric_row(out, "within_2yr", r.within_2yr);
    out << "n," << r.n << '\n';
    return out.str();
}

inline std::string age_bins_csv(const AgeBinReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "bin,n,mae,rmse,within_1yr,within_2yr\n";
    for (size_t b = 0; b < r.bins.size(); ++b) {
        const RegReport& x = r.bins[b];
        out << kAgeBinLabels[b] << ',' << x.n << ',' << x.mae << ',' << x.rmse << ','
            << x.within_1yr << ',' << x.within_2yr << '\n';
    }
    return out.str();
}

inline std::string confidence_csv(const ConfidenceCurve& c) {
    std::ostringstream out;
    out.precision(10);
    out << "age,count,mean_confidence\n";
    for (int i = 0; i < 13; ++i)
        out << kMinAge + i << ',' << c.count[static_cast<size_t>(i)] << ','
            << c.mean_confidence[static_cast<size_t>(i)] << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Minimal SVG line charts. Axes, ticks, gridlines, markers, legend; one
// polyline per series with NaN values breaking the line into segments.
// ---------------------------------------------------------------------------

struct ChartSeries {
    std::string name;
    std::vector<std::array<double, 2>> points; // (x, y); non-finite y = gap
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string svg_tick(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

inline constexpr std::array<const char*, 5> kChartPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                             "#9467bd", "#ff7f0e"};

} // namespace detail

inline std::string svg_line_chart(const std::string& title, const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<ChartSeries>& series, int width = 720,
                                  int height = 420) {
    const double ml = 64, mr = 20, mt = 40, mb = 52;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
            if (!any) {
                xmin = xmax = p[0];
                ymin = ymax = p[1];
                any = true;
            } else {
                xmin = std::min(xmin, p[0]);
                xmax = std::max(xmax, p[0]);
                ymin = std::min(ymin, p[1]);
                ymax = std::max(ymax, p[1]);
            }
        }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }

    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "  <text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << detail::xml_escape(title)
        << "</text>\n";

    if (!any) {
        out << "  <text x=\"" << width / 2 << "\" y=\"" << height / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
            << "fill=\"#888\">no data</text>\n</svg>\n";
        return out.str();
    }

    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / kTicks;
        const double fy = ymin + (ymax - ymin) * i / kTicks;
        const std::string gx = detail::svg_num(px(fx));
        const std::string gy = detail::svg_num(py(fy));
        out << "  <line x1=\"" << gx << "\" y1=\"" << detail::svg_num(mt) << "\" x2=\"" << gx
            << "\" y2=\"" << detail::svg_num(mt + ph) << "\" stroke=\"#e0e0e0\"/>\n";
        out << "  <line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << gy << "\" x2=\""
            << detail::svg_num(ml + pw) << "\" y2=\"" << gy << "\" stroke=\"#e0e0e0\"/>\n";
        out << "  <text x=\"" << gx << "\" y=\"" << detail::svg_num(mt + ph + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::svg_tick(fx) << "</text>\n";
        out << "  <text x=\"" << detail::svg_num(ml - 8) << "\" y=\"" << detail::svg_num(py(fy) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::svg_tick(fy) << "</text>\n";
    }
    out << "  <line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(mt + ph)
        << "\" x2=\"" << detail::svg_num(ml + pw) << "\" y2=\"" << detail::svg_num(mt + ph)
        << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(mt) << "\" x2=\""
        << detail::svg_num(ml) << "\" y2=\"" << detail::svg_num(mt + ph)
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << detail::svg_num(ml + pw / 2) << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << detail::xml_escape(x_label) << "</text>\n";
    out << "  <text x=\"16\" y=\"" << detail::svg_num(mt + ph / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << detail::svg_num(mt + ph / 2) << ")\">"
        << detail::xml_escape(y_label) << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = detail::kChartPalette[si % detail::kChartPalette.size()];
        std::vector<std::string> segment;
        const auto flush = [&]() {
            if (segment.size() >= 2) {
                out << "  <polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"2\" points=\"";
                for (size_t k = 0; k < segment.size(); ++k)
                    out << (k ? " " : "") << segment[k];
                out << "\"/>\n";
            }
            segment.clear();
        };
        for (const auto& p : series[si].points) {
            if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
                flush();
                continue;
            }
            segment.push_back(detail::svg_num(px(p[0])) + "," + detail::svg_num(py(p[1])));
            out << "  <circle cx=\"" << detail::svg_num(px(p[0])) << "\" cy=\""
                << detail::svg_num(py(p[1])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        flush();
    }

    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = detail::kChartPalette[si % detail::kChartPalette.size()];
        const double lx = ml + pw - 150, ly = mt + 10 + 18 * static_cast<double>(si);
        out << "  <line x1=\"" << detail::svg_num(lx) << "\" y1=\"" << detail::svg_num(ly)
            << "\" x2=\"" << detail::svg_num(lx + 24) << "\" y2=\"" << detail::svg_num(ly)
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "  <text x=\"" << detail::svg_num(lx + 30) << "\" y=\"" << detail::svg_num(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">"
            << detail::xml_escape(series[si].name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

inline ChartSeries confidence_series(const std::string& name, const ConfidenceCurve& c) {
    ChartSeries s;
    s.name = name;
    for (int i = 0; i < 13; ++i)
        s.points.push_back(
            {static_cast<double>(kMinAge + i), c.mean_confidence[static_cast<size_t>(i)]});
    return s;
}

inline ChartSeries age_bin_mae_series(const std::string& name, const AgeBinReport& r) {
    ChartSeries s;
    s.name = name;
    for (size_t b = 0; b < r.bins.size(); ++b)
        s.points.push_back({kAgeBinMidpoints[b], r.bins[b].mae});
    return s;
}

} // namespace ocularage
