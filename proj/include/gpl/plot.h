#ifndef GPL_PLOT_H_
#define GPL_PLOT_H_

#include <string>
#include <vector>

namespace gpl {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string config_hash;  // written as an XML comment
};

// Densities over `bins` equal-width bins on [lo, hi]; values outside are clamped
// into the end bins. Returns bin centers in x and densities (integrating to 1) in y.
Series DensityHistogram(const std::string& name, const std::vector<double>& values, double lo, double hi,
                        int bins);

// Standalone SVG line chart, one polyline with markers per series.
std::string LineChartSvg(const std::vector<Series>& series, const ChartSpec& spec);
void WriteTextFile(const std::string& path, const std::string& text);

// Minimal CSV reader: skips '#' comment lines; the first remaining line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int Column(const std::string& name) const;  // throws ValidationError when absent
};

CsvTable ReadCsv(const std::string& path);

}  // namespace gpl

#endif  // GPL_PLOT_H_
