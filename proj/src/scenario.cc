#include "gpl/scenario.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "gpl/cluster.h"
#include "gpl/digest.h"
#include "gpl/errors.h"
#include "gpl/io.h"

namespace gpl {

std::string ScenarioName(Scenario s) {
  switch (s) {
    case Scenario::kCrossTask:
      return "CROSS_TASK";
    case Scenario::kCrossDomain:
      return "CROSS_DOMAIN";
    case Scenario::kCrossDataset:
      return "CROSS_DATASET";
    case Scenario::kCrossClass:
      return "CROSS_CLASS";
    case Scenario::kCrossDistribution:
      return "CROSS_DISTRIBUTION";
  }
  return "?";
}

Scenario ParseScenario(const std::string& name) {
  for (Scenario s : {Scenario::kCrossTask, Scenario::kCrossDomain, Scenario::kCrossDataset, Scenario::kCrossClass,
                     Scenario::kCrossDistribution}) {
    if (ScenarioName(s) == name) return s;
  }
  throw InvalidArgument("unknown scenario '" + name +
                        "' (expected CROSS_TASK, CROSS_DOMAIN, CROSS_DATASET, CROSS_CLASS or CROSS_DISTRIBUTION)");
}

std::string TaskName(TaskLevel t) { return t == TaskLevel::kNode ? "NODE" : "GRAPH"; }

int LabeledGraph::NumClasses() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void SynthConfig::Validate() const {
  if (num_blocks < 1 || nodes_per_block < 1 || feature_dim < 1) {
    throw InvalidArgument("synth: blocks, nodes per block and feature dim must be positive");
  }
  if (!(p_intra >= 0 && p_intra <= 1 && p_inter >= 0 && p_inter <= 1)) {
    throw InvalidArgument("synth: edge probabilities must lie in [0, 1]");
  }
  if (!(separation >= 0)) throw InvalidArgument("synth: separation must be >= 0");
  if (!(noise >= 0)) throw InvalidArgument("synth: noise must be >= 0");
}

LabeledGraph GenSyntheticCorpus(const SynthConfig& cfg) {
  cfg.Validate();
  const int n = cfg.num_blocks * cfg.nodes_per_block;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(cfg.num_blocks, cfg.feature_dim);
  for (int b = 0; b < cfg.num_blocks; ++b) {
    RowVector dir(cfg.feature_dim);
    for (int j = 0; j < cfg.feature_dim; ++j) dir(j) = normal(rng);
    means.row(b) = RowVector::Constant(cfg.feature_dim, cfg.base_level) + cfg.separation * dir.normalized();
  }
  LabeledGraph out{Graph(Matrix::Zero(1, 1), {}), {}, "synthetic-" + std::to_string(cfg.seed)};
  Matrix x(n, cfg.feature_dim);
  out.labels.resize(n);
  for (int v = 0; v < n; ++v) {
    const int b = v / cfg.nodes_per_block;
    out.labels[v] = b;
    for (int j = 0; j < cfg.feature_dim; ++j) x(v, j) = means(b, j) + cfg.noise * normal(rng);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = out.labels[u] == out.labels[v] ? cfg.p_intra : cfg.p_inter;
      if (unit(rng) < p) edges.emplace_back(u, v);
    }
  }
  out.graph = Graph(std::move(x), std::move(edges));
  return out;
}

std::vector<LabeledSample> BuildInducedDataset(const LabeledGraph& master, int k_hops, int max_nodes,
                                               const std::vector<int>& centers) {
  if (k_hops < 1) throw InvalidArgument("build_induced_dataset: k_hops must be >= 1");
  std::vector<int> pick = centers;
  if (pick.empty()) {
    pick.resize(master.graph.num_nodes());
    std::iota(pick.begin(), pick.end(), 0);
  }
  std::vector<LabeledSample> out;
  out.reserve(pick.size());
  for (int c : pick) {
    const std::vector<int> nodes = BfsBall(master.graph, c, k_hops, max_nodes);
    out.push_back(LabeledSample{SubgraphOf(master.graph, nodes), master.labels.at(c), c});
  }
  return out;
}

std::vector<Part> PartitionByClustering(const Graph& master, int num_parts, std::uint64_t seed) {
  if (num_parts < 2) throw InvalidArgument("partition_by_clustering: num_parts must be >= 2");
  if (num_parts > master.num_nodes()) throw InvalidArgument("partition_by_clustering: num_parts exceeds node count");
  const KMeansResult km = KMeans(master.features(), num_parts, seed);
  std::vector<std::vector<int>> members(num_parts);
  for (int v = 0; v < master.num_nodes(); ++v) members[km.assignment[v]].push_back(v);
  std::vector<Part> parts;
  for (auto& nodes : members) {
    if (nodes.empty()) continue;
    parts.push_back(Part{SubgraphOf(master, nodes), nodes});
  }
  return parts;
}

namespace {

LabeledGraph Restrict(const LabeledGraph& master, const std::vector<int>& nodes, std::vector<int>* ids) {
  std::vector<int> labels;
  for (int v : nodes) labels.push_back(master.labels[v]);
  *ids = nodes;
  return LabeledGraph{SubgraphOf(master.graph, nodes), labels, master.name};
}

// Seeded draw without replacement of up to `cap` indices from [0, n).
std::vector<int> SampleCenters(int n, int cap, std::uint64_t seed) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  if (cap > 0 && cap < n) all.resize(cap);
  return all;
}

std::vector<Graph> PretrainFrom(const LabeledGraph& side, const std::vector<int>& ids, int k_hops, int max_nodes,
                                int cap, std::uint64_t seed, std::vector<int>* out_ids) {
  std::vector<Graph> out;
  for (const LabeledSample& s :
       BuildInducedDataset(side, k_hops, max_nodes, SampleCenters(side.graph.num_nodes(), cap, seed))) {
    out.push_back(s.graph);
    out_ids->push_back(ids[s.id]);
  }
  return out;
}

std::vector<LabeledSample> DownstreamFrom(const LabeledGraph& side, const std::vector<int>& ids, int k_hops,
                                          int max_nodes, int cap, std::uint64_t seed) {
  std::vector<LabeledSample> out =
      BuildInducedDataset(side, k_hops, max_nodes, SampleCenters(side.graph.num_nodes(), cap, seed));
  for (LabeledSample& s : out) s.id = ids[s.id];
  return out;
}

std::string JoinInts(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

// Remaps downstream labels to 0..C-1 in increasing order of the original label.
int RemapLabels(std::vector<LabeledSample>& data, std::map<std::string, std::string>& meta) {
  std::set<int> seen;
  for (const auto& s : data) seen.insert(s.label);
  std::map<int, int> remap;
  for (int l : seen) remap.emplace(l, static_cast<int>(remap.size()));
  for (auto& s : data) s.label = remap.at(s.label);
  meta["downstream_source_labels"] = JoinInts(std::vector<int>(seen.begin(), seen.end()));
  return static_cast<int>(seen.size());
}

}  // namespace

ScenarioSplit MakeSplit(const std::vector<LabeledGraph>& sources, Scenario scenario, std::uint64_t seed,
                        const SplitConfig& cfg) {
  const bool two = scenario == Scenario::kCrossDomain || scenario == Scenario::kCrossDataset;
  if (sources.size() < (two ? 2u : 1u)) {
    throw InvalidArgument("make_split: " + ScenarioName(scenario) + " needs " + (two ? "two masters" : "one master"));
  }
  for (const LabeledGraph& s : sources) {
    if (static_cast<int>(s.labels.size()) != s.graph.num_nodes()) {
      throw DimensionMismatch("make_split: label count differs from node count");
    }
  }
  ScenarioSplit split;
  split.scenario = scenario;
  split.task = TaskLevel::kNode;
  auto& meta = split.metadata;
  meta["scenario"] = ScenarioName(scenario);
  meta["seed"] = std::to_string(seed);
  meta["source_a"] = sources[0].name;
  const std::uint64_t pre_seed = DeriveSeed(seed, "pretrain_centers");
  const std::uint64_t down_seed = DeriveSeed(seed, "downstream_centers");
  const LabeledGraph& master = sources[0];

  switch (scenario) {
    case Scenario::kCrossDistribution: {
      std::vector<Part> parts = PartitionByClustering(master.graph, cfg.num_parts, DeriveSeed(seed, "partition"));
      struct Key {
        int majority;
        int size;
        int first;
        size_t index;
      };
      std::vector<Key> keys;
      for (size_t p = 0; p < parts.size(); ++p) {
        std::map<int, int> counts;
        for (int v : parts[p].nodes) ++counts[master.labels[v]];
        int majority = counts.begin()->first;
        for (const auto& [label, c] : counts) {
          if (c > counts[majority]) majority = label;
        }
        keys.push_back(Key{majority, static_cast<int>(parts[p].nodes.size()), parts[p].nodes.front(), p});
      }
      // Alternate sides within each majority label so both sides see most classes.
      std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.majority != b.majority) return a.majority < b.majority;
        if (a.size != b.size) return a.size > b.size;
        return a.first < b.first;
      });
      std::vector<int> pre_nodes, down_nodes;
      std::vector<int> pre_parts, down_parts;
      for (size_t i = 0; i < keys.size(); ++i) {
        auto& dst = i % 2 == 0 ? down_nodes : pre_nodes;
        (i % 2 == 0 ? down_parts : pre_parts).push_back(static_cast<int>(keys[i].index));
        for (int v : parts[keys[i].index].nodes) dst.push_back(v);
      }
      if (pre_nodes.empty() || down_nodes.empty()) throw InvalidArgument("make_split: partition left one side empty");
      std::sort(pre_nodes.begin(), pre_nodes.end());
      std::sort(down_nodes.begin(), down_nodes.end());
      std::vector<int> pre_ids, down_ids;
      const LabeledGraph pre = Restrict(master, pre_nodes, &pre_ids);
      const LabeledGraph down = Restrict(master, down_nodes, &down_ids);
      split.pretrain = PretrainFrom(pre, pre_ids, cfg.k_hops, cfg.max_nodes, cfg.pretrain_graphs, pre_seed,
                                    &split.pretrain_ids);
      split.downstream = DownstreamFrom(down, down_ids, cfg.k_hops, cfg.max_nodes, cfg.downstream_graphs, down_seed);
      meta["pretrain_parts"] = JoinInts(pre_parts);
      meta["downstream_parts"] = JoinInts(down_parts);
      break;
    }
    case Scenario::kCrossClass: {
      std::set<int> label_set(master.labels.begin(), master.labels.end());
      std::vector<int> labels(label_set.begin(), label_set.end());
      if (labels.size() < 3) throw InvalidArgument("make_split: CROSS_CLASS needs at least 3 labels");
      std::mt19937_64 rng(DeriveSeed(seed, "class_split"));
      std::shuffle(labels.begin(), labels.end(), rng);
      const size_t half = labels.size() / 2;
      const std::set<int> pre_labels(labels.begin(), labels.begin() + half);
      std::vector<int> pre_nodes, down_nodes;
      for (int v = 0; v < master.graph.num_nodes(); ++v) {
        (pre_labels.count(master.labels[v]) ? pre_nodes : down_nodes).push_back(v);
      }
      std::vector<int> pre_ids, down_ids;
      const LabeledGraph pre = Restrict(master, pre_nodes, &pre_ids);
      const LabeledGraph down = Restrict(master, down_nodes, &down_ids);
      split.pretrain = PretrainFrom(pre, pre_ids, cfg.k_hops, cfg.max_nodes, cfg.pretrain_graphs, pre_seed,
                                    &split.pretrain_ids);
      split.downstream = DownstreamFrom(down, down_ids, cfg.k_hops, cfg.max_nodes, cfg.downstream_graphs, down_seed);
      meta["pretrain_labels"] = JoinInts(std::vector<int>(pre_labels.begin(), pre_labels.end()));
      break;
    }
    case Scenario::kCrossDomain:
    case Scenario::kCrossDataset: {
      const LabeledGraph& other = sources[1];
      std::vector<int> a_ids(master.graph.num_nodes()), b_ids(other.graph.num_nodes());
      std::iota(a_ids.begin(), a_ids.end(), 0);
      std::iota(b_ids.begin(), b_ids.end(), 0);
      split.pretrain = PretrainFrom(master, a_ids, cfg.k_hops, cfg.max_nodes, cfg.pretrain_graphs, pre_seed,
                                    &split.pretrain_ids);
      split.downstream = DownstreamFrom(other, b_ids, cfg.k_hops, cfg.max_nodes, cfg.downstream_graphs, down_seed);
      meta["source_b"] = other.name;
      meta["shared_source"] = master.graph == other.graph && master.labels == other.labels ? "true" : "false";
      break;
    }
    case Scenario::kCrossTask: {
      // Graph-level pretraining samples from one half of the centers, node-level
      // downstream samples from the other half.
      const std::vector<int> order = SampleCenters(master.graph.num_nodes(), 0, DeriveSeed(seed, "task_split"));
      const size_t half = order.size() / 2;
      std::vector<int> pre_centers(order.begin(), order.begin() + half);
      std::vector<int> down_centers(order.begin() + half, order.end());
      if (cfg.pretrain_graphs > 0 && static_cast<int>(pre_centers.size()) > cfg.pretrain_graphs) {
        pre_centers.resize(cfg.pretrain_graphs);
      }
      if (cfg.downstream_graphs > 0 && static_cast<int>(down_centers.size()) > cfg.downstream_graphs) {
        down_centers.resize(cfg.downstream_graphs);
      }
      for (const LabeledSample& s : BuildInducedDataset(master, cfg.k_hops + 1, cfg.max_nodes, pre_centers)) {
        split.pretrain.push_back(s.graph);
        split.pretrain_ids.push_back(s.id);
      }
      split.downstream = BuildInducedDataset(master, cfg.k_hops, cfg.max_nodes, down_centers);
      meta["pretrain_task"] = "GRAPH";
      break;
    }
  }
  if (split.pretrain.empty() || split.downstream.empty()) throw InvalidArgument("make_split: empty corpus");
  split.num_classes = RemapLabels(split.downstream, meta);
  if (split.num_classes < 2) throw InvalidArgument("make_split: fewer than 2 downstream classes");
  meta["task"] = TaskName(split.task);
  return split;
}

FewShot SplitFewShot(const std::vector<LabeledSample>& data, int num_classes, int shots_per_class,
                     std::uint64_t seed) {
  if (shots_per_class < 1) throw InvalidArgument("few-shot: shots_per_class must be >= 1");
  std::vector<std::vector<size_t>> by_class(num_classes);
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].label < 0 || data[i].label >= num_classes) throw IndexOutOfRange("few-shot: label out of range");
    by_class[data[i].label].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> is_shot(data.size(), false);
  for (int c = 0; c < num_classes; ++c) {
    if (by_class[c].empty()) throw InvalidArgument("few-shot: class " + std::to_string(c) + " has no samples");
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    // Keep at least one sample of each class for testing when possible.
    const size_t take = std::min<size_t>(shots_per_class, by_class[c].size() > 1 ? by_class[c].size() - 1 : 1);
    for (size_t k = 0; k < take; ++k) is_shot[by_class[c][k]] = true;
  }
  FewShot out;
  for (size_t i = 0; i < data.size(); ++i) (is_shot[i] ? out.shots : out.test).push_back(data[i]);
  return out;
}

SvdProjection FitSvd(const std::vector<Graph>& fit_on, int k) {
  if (fit_on.empty()) throw InvalidArgument("svd_reduce: empty corpus");
  const int d = fit_on.front().feature_dim();
  if (k < 1 || k > d) throw InvalidArgument("svd_reduce: k must lie in [1, " + std::to_string(d) + "]");
  Eigen::Index rows = 0;
  for (const Graph& g : fit_on) {
    if (g.feature_dim() != d) throw DimensionMismatch("svd_reduce: mixed feature dims");
    rows += g.num_nodes();
  }
  Matrix stacked(rows, d);
  Eigen::Index at = 0;
  for (const Graph& g : fit_on) {
    stacked.middleRows(at, g.num_nodes()) = g.features();
    at += g.num_nodes();
  }
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  return SvdProjection{svd.matrixV().leftCols(k)};
}

Graph ApplySvd(const SvdProjection& proj, const Graph& g) {
  if (g.feature_dim() != proj.components.rows()) throw DimensionMismatch("svd_reduce: feature dim mismatch");
  return Graph(g.features() * proj.components, g.edges());
}

SvdProjection SvdReduce(ScenarioSplit& split, int k) {
  SvdProjection proj = FitSvd(split.pretrain, k);
  for (Graph& g : split.pretrain) g = ApplySvd(proj, g);
  for (LabeledSample& s : split.downstream) s.graph = ApplySvd(proj, s.graph);
  return proj;
}

namespace {

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

LabeledGraph LoadDataset(const std::string& feature_file, const std::string& edge_file,
                         const std::string& label_file, std::vector<std::string>* warnings) {
  std::vector<std::vector<double>> rows;
  const auto feature_lines = ReadLines(feature_file);
  for (size_t i = 0; i < feature_lines.size(); ++i) {
    if (SplitWhitespace(feature_lines[i]).empty()) continue;
    std::vector<double> row;
    for (std::string_view f : SplitCsv(feature_lines[i])) row.push_back(ParseDouble(f, feature_file, static_cast<int>(i + 1)));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(feature_file, static_cast<int>(i + 1),
                       "expected " + std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(feature_file, 0, "no feature rows");
  const int n = static_cast<int>(rows.size());
  Matrix x(n, static_cast<Eigen::Index>(rows.front().size()));
  for (int i = 0; i < n; ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) x(i, static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  std::vector<Edge> edges;
  std::set<Edge> seen;
  const auto edge_lines = ReadLines(edge_file);
  for (size_t i = 0; i < edge_lines.size(); ++i) {
    const auto fields = SplitWhitespace(edge_lines[i]);
    if (fields.empty()) continue;
    const int line = static_cast<int>(i + 1);
    if (fields.size() != 2) throw ParseError(edge_file, line, "edge line must be 'u v'");
    const long long u = ParseInt(fields[0], edge_file, line);
    const long long v = ParseInt(fields[1], edge_file, line);
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ParseError(edge_file, line, "node index out of range [0, " + std::to_string(n) + ")");
    }
    if (u == v) throw ParseError(edge_file, line, "self-loop");
    const Edge e(static_cast<int>(u), static_cast<int>(v));
    if (!seen.insert(e).second) {
      if (warnings != nullptr) warnings->push_back(edge_file + ":" + std::to_string(line) + ": duplicate edge dropped");
      continue;
    }
    edges.push_back(e);
  }
  std::vector<int> labels;
  const auto label_lines = ReadLines(label_file);
  for (size_t i = 0; i < label_lines.size(); ++i) {
    const auto fields = SplitWhitespace(label_lines[i]);
    if (fields.empty()) continue;
    const int line = static_cast<int>(i + 1);
    if (fields.size() != 1) throw ParseError(label_file, line, "expected one integer label");
    const long long l = ParseInt(fields[0], label_file, line);
    if (l < 0) throw ParseError(label_file, line, "labels must be >= 0");
    labels.push_back(static_cast<int>(l));
  }
  if (static_cast<int>(labels.size()) != n) {
    throw ParseError(label_file, static_cast<int>(label_lines.size()),
                     std::to_string(labels.size()) + " labels for " + std::to_string(n) + " nodes");
  }
  return LabeledGraph{Graph(std::move(x), std::move(edges)), std::move(labels),
                      std::filesystem::path(feature_file).stem().string()};
}

void SaveDataset(const LabeledGraph& data, const std::string& feature_file, const std::string& edge_file,
                 const std::string& label_file) {
  std::ofstream f(feature_file), e(edge_file), l(label_file);
  if (!f || !e || !l) throw ValidationError("cannot write dataset files");
  const Matrix& x = data.graph.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) f << (j ? "," : "") << FormatDouble(x(i, j));
    f << '\n';
  }
  for (const Edge& edge : data.graph.edges()) e << edge.u << ' ' << edge.v << '\n';
  for (int label : data.labels) l << label << '\n';
}

std::string SaveSplit(const ScenarioSplit& split, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "pretrain");
  fs::create_directories(fs::path(dir) / "downstream");
  nlohmann::json manifest;
  manifest["scenario"] = ScenarioName(split.scenario);
  manifest["task"] = TaskName(split.task);
  manifest["num_classes"] = split.num_classes;
  manifest["metadata"] = split.metadata;
  nlohmann::json pre = nlohmann::json::array();
  for (size_t i = 0; i < split.pretrain.size(); ++i) {
    const std::string rel = "pretrain/g" + std::to_string(i) + ".txt";
    SaveGraph((fs::path(dir) / rel).string(), split.pretrain[i]);
    pre.push_back({{"file", rel}, {"id", split.pretrain_ids.at(i)}});
  }
  nlohmann::json down = nlohmann::json::array();
  for (size_t i = 0; i < split.downstream.size(); ++i) {
    const std::string rel = "downstream/g" + std::to_string(i) + ".txt";
    SaveGraph((fs::path(dir) / rel).string(), split.downstream[i].graph);
    down.push_back({{"file", rel}, {"id", split.downstream[i].id}, {"label", split.downstream[i].label}});
  }
  manifest["pretrain"] = pre;
  manifest["downstream"] = down;
  const std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << manifest.dump(2) << '\n';
  return path;
}

ScenarioSplit LoadSplit(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open " + manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path, 0, e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  ScenarioSplit split;
  try {
    split.scenario = ParseScenario(manifest.at("scenario").get<std::string>());
    split.task = manifest.at("task").get<std::string>() == "GRAPH" ? TaskLevel::kGraph : TaskLevel::kNode;
    split.num_classes = manifest.at("num_classes").get<int>();
    split.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& item : manifest.at("pretrain")) {
      split.pretrain.push_back(LoadGraph((base / item.at("file").get<std::string>()).string()));
      split.pretrain_ids.push_back(item.at("id").get<int>());
    }
    for (const auto& item : manifest.at("downstream")) {
      split.downstream.push_back(LabeledSample{LoadGraph((base / item.at("file").get<std::string>()).string()),
                                               item.at("label").get<int>(), item.at("id").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest_path + ": schema violation: " + e.what());
  }
  return split;
}

}  // namespace gpl
