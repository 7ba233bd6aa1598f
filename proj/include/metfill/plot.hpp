#pragma once

// Static SVG charts of a benchmark report: one panel per (station, variable),
// grouped bars of RMSE per missingness level, one bar colour per method.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "metfill/error.hpp"
#include "metfill/eval.hpp"

namespace metfill {

namespace plot_detail {

inline constexpr int kPanelW = 460;
inline constexpr int kPanelH = 280;
inline constexpr int kColumns = 2;
inline constexpr int kMarginL = 56, kMarginR = 16, kMarginT = 34, kMarginB = 44;

inline const char* colour(MethodTag m) {
	switch (m) {
	case MethodTag::NR: return "#4c72b0";
	case MethodTag::GC: return "#dd8452";
	case MethodTag::NRGC: return "#55a868";
	case MethodTag::NN: return "#c44e52";
	case MethodTag::LinearInterp: return "#8172b3";
	}
	return "#999999";
}

inline std::string fmt(const char* pattern, double v) {
	char buf[64];
	std::snprintf(buf, sizeof buf, pattern, v);
	return buf;
}

inline std::string escape(std::string_view text) {
	std::string out;
	for (char c : text) {
		switch (c) {
		case '&': out += "&amp;"; break;
		case '<': out += "&lt;"; break;
		case '>': out += "&gt;"; break;
		case '"': out += "&quot;"; break;
		default: out.push_back(c);
		}
	}
	return out;
}

} // namespace plot_detail

/// Number of chart panels `render_svg` draws for a report.
inline std::size_t panel_count(const EvalReport& report) {
	std::vector<std::pair<std::string, Variable>> keys;
	for (const auto& c : report.cells)
		if (std::find(keys.begin(), keys.end(), std::pair{c.station_id, c.variable}) == keys.end())
			keys.emplace_back(c.station_id, c.variable);
	return keys.size();
}

inline std::string render_svg(const EvalReport& report) {
	using namespace plot_detail;
	if (report.cells.empty()) throw Error(Errc::EmptyReport, "report has no cells");

	std::vector<std::pair<std::string, Variable>> keys;
	for (const auto& c : report.cells)
		if (std::find(keys.begin(), keys.end(), std::pair{c.station_id, c.variable}) == keys.end())
			keys.emplace_back(c.station_id, c.variable);

	const int columns = std::min<int>(kColumns, static_cast<int>(keys.size()));
	const int rows = (static_cast<int>(keys.size()) + columns - 1) / columns;
	const int width = columns * kPanelW;
	const int height = rows * kPanelH;

	std::string svg;
	svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
	       std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
	       "\" font-family=\"sans-serif\" font-size=\"11\">\n";
	svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

	for (std::size_t p = 0; p < keys.size(); ++p) {
		const auto& [station, variable] = keys[p];
		std::vector<const EvalCell*> cells;
		std::vector<double> levels;
		std::vector<MethodTag> methods;
		double ymax = 0.0;
		for (const auto& c : report.cells) {
			if (c.station_id != station || c.variable != variable) continue;
			cells.push_back(&c);
			if (std::find(levels.begin(), levels.end(), c.level) == levels.end()) levels.push_back(c.level);
			if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
			if (c.rmse) ymax = std::max(ymax, *c.rmse);
		}
		std::sort(levels.begin(), levels.end());
		if (ymax <= 0.0) ymax = 1.0;
		ymax *= 1.1;

		const int ox = static_cast<int>(p % static_cast<std::size_t>(columns)) * kPanelW;
		const int oy = static_cast<int>(p / static_cast<std::size_t>(columns)) * kPanelH;
		const double plot_w = kPanelW - kMarginL - kMarginR;
		const double plot_h = kPanelH - kMarginT - kMarginB;
		const double x0 = ox + kMarginL;
		const double y0 = oy + kMarginT + plot_h;

		svg += "<g class=\"panel\">\n";
		svg += "<text x=\"" + std::to_string(ox + kPanelW / 2) + "\" y=\"" + std::to_string(oy + 18) +
		       "\" text-anchor=\"middle\" font-size=\"13\">" + escape(station) + " (" + std::string(to_string(variable)) +
		       ")</text>\n";
		svg += "<line x1=\"" + fmt("%.2f", x0) + "\" y1=\"" + fmt("%.2f", y0) + "\" x2=\"" + fmt("%.2f", x0 + plot_w) +
		       "\" y2=\"" + fmt("%.2f", y0) + "\" stroke=\"black\"/>\n";
		svg += "<line x1=\"" + fmt("%.2f", x0) + "\" y1=\"" + fmt("%.2f", y0) + "\" x2=\"" + fmt("%.2f", x0) + "\" y2=\"" +
		       fmt("%.2f", y0 - plot_h) + "\" stroke=\"black\"/>\n";
		for (int tick = 0; tick <= 4; ++tick) {
			const double v = ymax * tick / 4.0;
			const double y = y0 - plot_h * tick / 4.0;
			svg += "<text x=\"" + fmt("%.2f", x0 - 4) + "\" y=\"" + fmt("%.2f", y + 4) + "\" text-anchor=\"end\">" +
			       fmt("%.3g", v) + "</text>\n";
		}
		svg += "<text x=\"" + std::to_string(ox + 14) + "\" y=\"" + fmt("%.2f", y0 - plot_h / 2) +
		       "\" transform=\"rotate(-90 " + std::to_string(ox + 14) + " " + fmt("%.2f", y0 - plot_h / 2) +
		       ")\" text-anchor=\"middle\">RMSE</text>\n";
		svg += "<text x=\"" + fmt("%.2f", x0 + plot_w / 2) + "\" y=\"" + std::to_string(oy + kPanelH - 8) +
		       "\" text-anchor=\"middle\">missingness level</text>\n";

		const double group_w = plot_w / static_cast<double>(levels.size());
		const double bar_w = group_w * 0.8 / static_cast<double>(methods.size());
		for (std::size_t li = 0; li < levels.size(); ++li) {
			const double gx = x0 + group_w * static_cast<double>(li) + group_w * 0.1;
			svg += "<text x=\"" + fmt("%.2f", x0 + group_w * (static_cast<double>(li) + 0.5)) + "\" y=\"" +
			       fmt("%.2f", y0 + 14) + "\" text-anchor=\"middle\">" + fmt("%g", levels[li]) + "</text>\n";
			for (std::size_t mi = 0; mi < methods.size(); ++mi) {
				for (const auto* c : cells) {
					if (c->level != levels[li] || c->method != methods[mi] || !c->rmse) continue;
					const double h = plot_h * *c->rmse / ymax;
					svg += "<rect class=\"bar\" x=\"" + fmt("%.2f", gx + bar_w * static_cast<double>(mi)) + "\" y=\"" + fmt("%.2f", y0 - h) +
					       "\" width=\"" + fmt("%.2f", bar_w) + "\" height=\"" + fmt("%.2f", h) + "\" fill=\"" +
					       colour(methods[mi]) + "\"><title>" + std::string(to_string(methods[mi])) + " " +
					       fmt("%g", levels[li]) + ": " + fmt("%.6g", *c->rmse) + "</title></rect>\n";
				}
			}
		}
		for (std::size_t mi = 0; mi < methods.size(); ++mi) {
			const double lx = x0 + plot_w - 60.0;
			const double ly = oy + kMarginT + 4.0 + 14.0 * static_cast<double>(mi);
			svg += "<rect x=\"" + fmt("%.2f", lx) + "\" y=\"" + fmt("%.2f", ly) + "\" width=\"10\" height=\"10\" fill=\"" +
			       colour(methods[mi]) + "\"/>\n";
			svg += "<text x=\"" + fmt("%.2f", lx + 14) + "\" y=\"" + fmt("%.2f", ly + 9) + "\">" +
			       std::string(to_string(methods[mi])) + "</text>\n";
		}
		svg += "</g>\n";
	}
	svg += "</svg>\n";
	return svg;
}

inline void emit_plot(const EvalReport& report, const std::filesystem::path& path) {
	const auto svg = render_svg(report);
	std::ofstream out(path, std::ios::binary);
	if (!out) throw Error(Errc::Io, "cannot write " + path.string());
	out << svg;
}

} // namespace metfill
