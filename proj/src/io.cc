#include "gpl/io.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gpl/errors.h"

namespace gpl {

std::string FormatDouble(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view text, const std::string& source, int line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError(source, line, "expected a real number, got '" + std::string(text) + "'");
  }
  return value;
}

long long ParseInt(std::string_view text, const std::string& source, int line) {
  long long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(source, line, "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

namespace {

void WriteRows(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << FormatDouble(m(r, c));
    }
    out << '\n';
  }
}

// Reads the next non-empty line; returns false at EOF.
bool NextLine(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!SplitWhitespace(line).empty()) return true;
  }
  return false;
}

Matrix ReadRows(std::istream& in, long long rows, long long cols, const std::string& source,
                int& line_no) {
  Matrix m(rows, cols);
  std::string line;
  for (long long r = 0; r < rows; ++r) {
    if (!NextLine(in, line, line_no)) {
      throw ParseError(source, line_no, "unexpected end of file reading row " + std::to_string(r));
    }
    const auto fields = SplitWhitespace(line);
    if (static_cast<long long>(fields.size()) != cols) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(cols) + " values, got " +
                           std::to_string(fields.size()));
    }
    for (long long c = 0; c < cols; ++c) m(r, c) = ParseDouble(fields[c], source, line_no);
  }
  return m;
}

}  // namespace

void WriteGraph(std::ostream& out, const Graph& g) {
  out << g.num_nodes() << ' ' << g.feature_dim() << '\n';
  WriteRows(out, g.features());
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

Graph ReadGraph(std::istream& in, const std::string& source) {
  int line_no = 0;
  std::string line;
  if (!NextLine(in, line, line_no)) throw ParseError(source, line_no, "empty graph file");
  const auto header = SplitWhitespace(line);
  if (header.size() != 2) throw ParseError(source, line_no, "header must be 'N d'");
  const long long n = ParseInt(header[0], source, line_no);
  const long long d = ParseInt(header[1], source, line_no);
  if (n < 1 || d < 1) throw ParseError(source, line_no, "N and d must be positive");
  Matrix x = ReadRows(in, n, d, source, line_no);
  std::vector<Edge> edges;
  while (NextLine(in, line, line_no)) {
    const auto fields = SplitWhitespace(line);
    if (fields.size() != 2) throw ParseError(source, line_no, "edge line must be 'u v'");
    const long long u = ParseInt(fields[0], source, line_no);
    const long long v = ParseInt(fields[1], source, line_no);
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ParseError(source, line_no, "edge endpoint out of range");
    }
    if (u == v) throw ParseError(source, line_no, "self-loop");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return Graph(std::move(x), std::move(edges));
}

void SaveGraph(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  WriteGraph(out, g);
}

Graph LoadGraph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return ReadGraph(in, path);
}

const std::string& Checkpoint::Meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw ValidationError("checkpoint: missing meta '" + key + "'");
}

bool Checkpoint::HasMeta(const std::string& key) const {
  for (const auto& kv : meta) {
    if (kv.first == key) return true;
  }
  return false;
}

const Matrix& Checkpoint::Tensor(const std::string& name) const {
  for (const auto& [k, m] : tensors) {
    if (k == name) return m;
  }
  throw ValidationError("checkpoint: missing tensor '" + name + "'");
}

bool Checkpoint::HasTensor(const std::string& name) const {
  for (const auto& kv : tensors) {
    if (kv.first == name) return true;
  }
  return false;
}

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt) {
  out << "gpl-lab-checkpoint " << Checkpoint::kVersion << '\n';
  out << "kind " << ckpt.kind << '\n';
  for (const auto& [k, v] : ckpt.meta) out << "meta " << k << ' ' << v << '\n';
  for (const auto& [name, m] : ckpt.tensors) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    WriteRows(out, m);
  }
  out << "end\n";
}

Checkpoint ReadCheckpoint(std::istream& in, const std::string& source) {
  int line_no = 0;
  std::string line;
  if (!NextLine(in, line, line_no)) throw ParseError(source, line_no, "empty checkpoint");
  auto fields = SplitWhitespace(line);
  if (fields.size() != 2 || fields[0] != "gpl-lab-checkpoint") {
    throw ParseError(source, line_no, "missing 'gpl-lab-checkpoint <version>' header");
  }
  if (ParseInt(fields[1], source, line_no) != Checkpoint::kVersion) {
    throw ParseError(source, line_no, "unsupported checkpoint version");
  }
  Checkpoint ckpt;
  bool ended = false;
  while (NextLine(in, line, line_no)) {
    fields = SplitWhitespace(line);
    if (fields[0] == "kind" && fields.size() == 2) {
      ckpt.kind = std::string(fields[1]);
    } else if (fields[0] == "meta" && fields.size() == 3) {
      ckpt.meta.emplace_back(std::string(fields[1]), std::string(fields[2]));
    } else if (fields[0] == "tensor" && fields.size() == 4) {
      const long long rows = ParseInt(fields[2], source, line_no);
      const long long cols = ParseInt(fields[3], source, line_no);
      if (rows < 0 || cols < 0) throw ParseError(source, line_no, "negative tensor shape");
      std::string name(fields[1]);
      ckpt.tensors.emplace_back(std::move(name), ReadRows(in, rows, cols, source, line_no));
    } else if (fields[0] == "end" && fields.size() == 1) {
      ended = true;
      break;
    } else {
      throw ParseError(source, line_no, "unrecognized line '" + line + "'");
    }
  }
  if (!ended) throw ParseError(source, line_no, "missing 'end' marker");
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  WriteCheckpoint(out, ckpt);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return ReadCheckpoint(in, path);
}

std::string CheckpointText(const Checkpoint& ckpt) {
  std::ostringstream out;
  WriteCheckpoint(out, ckpt);
  return out.str();
}

}  // namespace gpl
