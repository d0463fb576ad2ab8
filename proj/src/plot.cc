#include "gpl/plot.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpl/errors.h"
#include "gpl/io.h"

namespace gpl {

Series DensityHistogram(const std::string& name, const std::vector<double>& values, double lo, double hi,
                        int bins) {
  if (bins < 1 || !(hi > lo)) throw InvalidArgument("density_histogram: need bins >= 1 and hi > lo");
  Series s;
  s.name = name;
  const double width = (hi - lo) / bins;
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    const int b = std::clamp(static_cast<int>(std::floor((v - lo) / width)), 0, bins - 1);
    counts[b] += 1.0;
  }
  for (int b = 0; b < bins; ++b) {
    s.x.push_back(lo + (b + 0.5) * width);
    s.y.push_back(values.empty() ? 0.0 : counts[b] / (values.size() * width));
  }
  return s;
}

namespace {

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Num(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string LineChartSvg(const std::vector<Series>& series, const ChartSpec& spec) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = 0.0, y1 = -INFINITY;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionMismatch("line_chart: series '" + s.name + "' has unequal x/y");
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (!std::isfinite(y1) || y1 == y0) y1 = y0 + 1.0;
  const double w = 640, h = 400, left = 60, right = 150, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  o << "<!-- config_hash=" << spec.config_hash << " -->\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << Escape(spec.title) << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    o << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << Num(xv) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << Num(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << Escape(spec.x_label) << "</text>\n";
  o << "<text x=\"14\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << top + ph / 2 << ")\">" << Escape(spec.y_label) << "</text>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << "," << py(s.y[i]);
    o << "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i) {
      o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 16 * (k + 1);
    o << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << color
      << "\"/>\n";
    o << "<text x=\"" << left + pw + 28 << "\" y=\"" << ly << "\" font-size=\"12\">" << Escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

int CsvTable::Column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("csv: missing column '" + name + "'");
  return static_cast<int>(it - header.begin());
}

CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  CsvTable t;
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw ParseError(path, lineno, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                         std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError(path + ": no header line");
  return t;
}

}  // namespace gpl
