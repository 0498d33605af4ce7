#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gcrobust/model.hpp"

namespace gcr {

// Checkpoint layout (text, version 1):
//
//   gcrobust-checkpoint 1
//   model.kind <gin|gcn>
//   model.input_dim <int>
//   model.hidden <int>
//   model.layers <int>
//   model.num_classes <int>
//   model.readout <auto|sum|mean>
//   model.propagation <norm_adjacency|laplacian>
//   model.gin_epsilon <hexfloat>
//   model.train_epsilon <0|1>
//   arrays <count>
//   array <name> <rows> <cols>
//   <one line per row: space-separated C99 hexfloats>
//   ...
//   end
//
// Arrays appear in Model::state() order. Hexfloats make the round trip
// bit-exact.

namespace detail {

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_hexfloat(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) throw DataError("checkpoint: bad number '" + tok + "'");
  return v;
}

}  // namespace detail

inline void save_checkpoint(Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const ModelConfig& c = model.config();
  out << "gcrobust-checkpoint 1\n";
  out << "model.kind " << to_string(c.kind) << '\n';
  out << "model.input_dim " << c.input_dim << '\n';
  out << "model.hidden " << c.hidden << '\n';
  out << "model.layers " << c.layers << '\n';
  out << "model.num_classes " << c.num_classes << '\n';
  out << "model.readout " << (c.readout ? to_string(*c.readout) : std::string("auto")) << '\n';
  out << "model.propagation " << to_string(c.gcn_propagation) << '\n';
  out << "model.gin_epsilon " << detail::hexfloat(c.gin_epsilon) << '\n';
  out << "model.train_epsilon " << (c.train_epsilon ? 1 : 0) << '\n';
  const auto arrays = model.state();
  out << "arrays " << arrays.size() << '\n';
  for (const Parameter* p : arrays) {
    out << "array " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) out << (j ? " " : "") << detail::hexfloat(p->value(i, j));
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw DataError("failed while writing checkpoint " + path.string());
}

inline Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  auto expect = [&](const std::string& key) {
    std::string k, v;
    if (!(in >> k >> v) || k != key) throw DataError("checkpoint: expected '" + key + "'");
    return v;
  };
  if (expect("gcrobust-checkpoint") != "1") throw DataError("checkpoint: unsupported version");
  ModelConfig c;
  const std::string kind = expect("model.kind");
  if (kind != "gin" && kind != "gcn") throw DataError("checkpoint: bad model.kind");
  c.kind = kind == "gin" ? LayerKind::GIN : LayerKind::GCN;
  c.input_dim = std::stoi(expect("model.input_dim"));
  c.hidden = std::stoi(expect("model.hidden"));
  c.layers = std::stoi(expect("model.layers"));
  c.num_classes = std::stoi(expect("model.num_classes"));
  const std::string readout = expect("model.readout");
  if (readout == "sum") c.readout = ReadoutMode::Sum;
  else if (readout == "mean") c.readout = ReadoutMode::Mean;
  else if (readout != "auto") throw DataError("checkpoint: bad model.readout");
  const std::string prop = expect("model.propagation");
  if (prop == "norm_adjacency") c.gcn_propagation = Propagation::NormAdjacency;
  else if (prop == "laplacian") c.gcn_propagation = Propagation::Laplacian;
  else throw DataError("checkpoint: bad model.propagation");
  c.gin_epsilon = detail::parse_hexfloat(expect("model.gin_epsilon"));
  c.train_epsilon = expect("model.train_epsilon") == "1";

  Model model(c, 0);
  const auto arrays = model.state();
  if (std::stoul(expect("arrays")) != arrays.size()) throw DataError("checkpoint: array count mismatch");
  for (Parameter* p : arrays) {
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> name >> rows >> cols) || tag != "array" || name != p->name) {
      throw DataError("checkpoint: expected array " + p->name);
    }
    if (rows != p->value.rows() || cols != p->value.cols()) throw DataError("checkpoint: shape mismatch for " + name);
    std::string tok;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> tok)) throw DataError("checkpoint: truncated array " + name);
        p->value(i, j) = detail::parse_hexfloat(tok);
      }
    p->zero_grad();
  }
  std::string tail;
  if (!(in >> tail) || tail != "end") throw DataError("checkpoint: missing end marker");
  return model;
}

}  // namespace gcr
