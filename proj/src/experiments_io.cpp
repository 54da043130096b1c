#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "heavychain/experiments.hpp"

namespace heavychain {

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_once(const std::filesystem::path& path, const std::string& content,
                     bool force) {
    if (!force && std::filesystem::exists(path))
        throw OutputExists("output exists (use --force to overwrite): " +
                           path.string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    out << content;
}

// Minimal standalone SVG: one polyline per series over a linear frame.
std::string render_svg(const nlohmann::json& plot) {
    const int W = 640, H = 440, ML = 60, MR = 20, MT = 20, MB = 50;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                            "#8c564b"};

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : plot.at("series")) {
        for (const auto& x : s.at("x")) {
            xmin = std::min(xmin, x.get<double>());
            xmax = std::max(xmax, x.get<double>());
        }
        for (const auto& y : s.at("y")) {
            ymin = std::min(ymin, y.get<double>());
            ymax = std::max(ymax, y.get<double>());
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double x) {
        return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    };
    auto sy = [&](double y) {
        return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
        << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR
        << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\""
        << H - MB << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (W / 2) << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">"
        << plot.value("xlabel", std::string("x")) << "</text>\n";
    svg << "<text x=\"15\" y=\"" << (H / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 "
        << (H / 2) << ")\">" << plot.value("ylabel", std::string("y")) << "</text>\n";

    // a few tick labels
    for (int i = 0; i <= 4; ++i) {
        const double x = xmin + (xmax - xmin) * i / 4.0;
        const double y = ymin + (ymax - ymin) * i / 4.0;
        svg << "<text x=\"" << sx(x) << "\" y=\"" << H - MB + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << format_value(x)
            << "</text>\n";
        svg << "<text x=\"" << ML - 6 << "\" y=\"" << sy(y) + 3
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_value(y)
            << "</text>\n";
    }

    int ci = 0;
    int legend_y = MT + 12;
    for (const auto& s : plot.at("series")) {
        const auto& xs = s.at("x");
        const auto& ys = s.at("y");
        const char* color = colors[ci % 6];
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            svg << sx(xs[i].get<double>()) << "," << sy(ys[i].get<double>()) << " ";
        svg << "\"/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            svg << "<circle cx=\"" << sx(xs[i].get<double>()) << "\" cy=\""
                << sy(ys[i].get<double>()) << "\" r=\"2.5\" fill=\"" << color
                << "\"/>\n";
        svg << "<text x=\"" << W - MR - 4 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
            << s.value("name", std::string("series")) << "</text>\n";
        legend_y += 14;
        ++ci;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace

std::string to_csv(const SweepResult& result) {
    std::ostringstream out;
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
        if (c) out << ",";
        out << result.columns[c];
    }
    out << "\n";
    for (const auto& row : result.records) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ",";
            out << format_value(row[c]);
        }
        out << "\n";
    }
    return out.str();
}

void write_outputs(const SweepResult& result, const ExperimentConfig& cfg, bool force) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path base = fs::path(cfg.out_dir) / result.experiment;

    if (cfg.format == "json") {
        nlohmann::json j;
        j["experiment"] = result.experiment;
        j["columns"] = result.columns;
        j["records"] = result.records;
        j["summary"] = result.summary;
        write_file_once(base.string() + ".json", j.dump(2) + "\n", force);
    } else if (cfg.format == "csv") {
        write_file_once(base.string() + ".csv", to_csv(result), force);
        write_file_once(base.string() + ".summary.json", result.summary.dump(2) + "\n",
                        force);
    } else {
        throw std::invalid_argument("unknown output format: " + cfg.format);
    }

    if (cfg.plot && result.summary.contains("plot"))
        write_file_once(base.string() + ".svg", render_svg(result.summary["plot"]), force);
}

std::vector<std::string> evaluate_check(const nlohmann::json& check,
                                        const nlohmann::json& summary) {
    std::vector<std::string> failures;
    if (check.is_null()) return failures;
    for (const auto& item : check) {
        const std::string stat = item.at("stat").get<std::string>();
        double value;
        try {
            value = summary.at(nlohmann::json::json_pointer(stat)).get<double>();
        } catch (const std::exception& e) {
            failures.push_back("check stat not found: " + stat);
            continue;
        }
        if (item.contains("le") && !(value <= item["le"].get<double>())) {
            std::ostringstream msg;
            msg << stat << " = " << value << " exceeds " << item["le"].get<double>();
            failures.push_back(msg.str());
        }
        if (item.contains("ge") && !(value >= item["ge"].get<double>())) {
            std::ostringstream msg;
            msg << stat << " = " << value << " below " << item["ge"].get<double>();
            failures.push_back(msg.str());
        }
    }
    return failures;
}

} // namespace heavychain
