#ifndef GPL_IO_H_
#define GPL_IO_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpl/graph.h"

namespace gpl {

// Shortest decimal form that parses back to the identical double.
std::string FormatDouble(double x);
double ParseDouble(std::string_view text, const std::string& source, int line);
long long ParseInt(std::string_view text, const std::string& source, int line);
std::vector<std::string_view> SplitWhitespace(std::string_view line);

// Graph text format:
//   N d
//   N rows of d space-separated reals
//   one "u v" line per edge
void WriteGraph(std::ostream& out, const Graph& g);
Graph ReadGraph(std::istream& in, const std::string& source = "<graph>");
void SaveGraph(const std::string& path, const Graph& g);
Graph LoadGraph(const std::string& path);

// Versioned text tensor dump shared by encoder checkpoints, prompt states and
// attack states.
//   gpl-lab-checkpoint 1
//   kind <kind>
//   meta <key> <value>          (any number)
//   tensor <name> <rows> <cols> followed by <rows> lines of values
//   end
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Matrix>> tensors;

  const std::string& Meta(const std::string& key) const;
  bool HasMeta(const std::string& key) const;
  const Matrix& Tensor(const std::string& name) const;
  bool HasTensor(const std::string& name) const;
};

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint ReadCheckpoint(std::istream& in, const std::string& source = "<checkpoint>");
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);
std::string CheckpointText(const Checkpoint& ckpt);

}  // namespace gpl

#endif  // GPL_IO_H_
