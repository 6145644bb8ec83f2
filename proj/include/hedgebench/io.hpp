#pragma once

// File formats: network parameters (JSON), hedge reports (CSV + JSON), the
// experiment CSVs and the run manifest.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hedgebench/experiments.hpp"
#include "hedgebench/format.hpp"
#include "hedgebench/hedging.hpp"
#include "hedgebench/mlp.hpp"
#include "hedgebench/training.hpp"

namespace hedgebench {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::ordered_json;

/// FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// ---------------------------------------------------------------------------
// Network parameters

/// Layers are named fc1, fc2, ... with weights as row-major [out][in] arrays.
inline json params_to_json(const MlpParams& p, std::uint64_t seed, const std::string& config_hash) {
  json doc;
  doc["format"] = "hedgebench-mlp";
  doc["version"] = kVersion;
  doc["widths"] = p.widths();
  doc["seed"] = seed;
  doc["config_hash"] = config_hash;
  json layers = json::object();
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    json layer;
    layer["shape"] = {p.fan_out(l), p.fan_in(l)};
    json rows = json::array();
    const auto w = p.weights(l);
    for (std::size_t o = 0; o < p.fan_out(l); ++o)
      rows.push_back(std::vector<double>(w.begin() + o * p.fan_in(l), w.begin() + (o + 1) * p.fan_in(l)));
    layer["weight"] = rows;
    const auto b = p.bias(l);
    layer["bias"] = std::vector<double>(b.begin(), b.end());
    layers["fc" + std::to_string(l + 1)] = layer;
  }
  doc["layers"] = layers;
  return doc;
}

inline MlpParams params_from_json(const json& doc) {
  if (!doc.contains("widths") || !doc.contains("layers"))
    throw std::runtime_error("params json: missing 'widths' or 'layers'");
  MlpParams p(doc.at("widths").get<std::vector<std::size_t>>());
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    const std::string name = "fc" + std::to_string(l + 1);
    if (!doc.at("layers").contains(name)) throw std::runtime_error("params json: missing layer " + name);
    const auto& layer = doc.at("layers").at(name);
    const auto& rows = layer.at("weight");
    if (rows.size() != p.fan_out(l)) throw std::runtime_error("params json: " + name + " has wrong row count");
    auto w = p.weights(l);
    for (std::size_t o = 0; o < p.fan_out(l); ++o) {
      const auto row = rows.at(o).get<std::vector<double>>();
      if (row.size() != p.fan_in(l)) throw std::runtime_error("params json: " + name + " has wrong column count");
      std::copy(row.begin(), row.end(), w.begin() + o * p.fan_in(l));
    }
    const auto bias = layer.at("bias").get<std::vector<double>>();
    if (bias.size() != p.fan_out(l)) throw std::runtime_error("params json: " + name + " has wrong bias size");
    std::copy(bias.begin(), bias.end(), p.bias(l).begin());
  }
  return p;
}

inline MlpParams read_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params file '" + path + "'");
  return params_from_json(json::parse(in));
}

// ---------------------------------------------------------------------------
// Reports and tables

inline void write_loss_csv(std::ostream& out, const std::vector<LossRecord>& history) {
  out << "step,epoch,loss\n";
  for (const auto& r : history) out << r.step << "," << r.epoch << "," << fmt_double(r.loss) << "\n";
}

/// Loss histories of several cost rates in one file.
inline void write_loss_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "alpha,step,epoch,loss\n";
  for (const auto& c : cells)
    for (const auto& r : c.trained.history)
      out << fmt_double(c.alpha) << "," << r.step << "," << r.epoch << "," << fmt_double(r.loss) << "\n";
}

inline void write_costs_csv(std::ostream& out, const HedgeReport& rep) {
  out << "path,cost,tc_cost\n";
  for (std::size_t i = 0; i < rep.costs.size(); ++i)
    out << i << "," << fmt_double(rep.costs[i]) << "," << fmt_double(rep.tc_costs[i]) << "\n";
}

inline json report_to_json(const HedgeReport& rep) {
  json doc;
  doc["n_paths"] = rep.costs.size();
  doc["mean"] = rep.mean;
  doc["std"] = rep.std;
  doc["mean_tc"] = rep.tc_costs.empty() ? 0.0 : mean_of(rep.tc_costs);
  doc["histogram"] = {{"edges", rep.histogram.edges}, {"counts", rep.histogram.counts}};
  return doc;
}

inline void write_tables_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "alpha,set,strategy,mean_pct,std_pct\n";
  for (const auto& r : rows)
    out << fmt_double(r.alpha) << "," << r.set << "," << to_string(r.strategy) << "," << fmt_double(r.mean) << ","
        << fmt_double(r.std) << "\n";
}

inline void write_histogram_header(std::ostream& out) { out << "alpha,set,strategy,bin,lo,hi,count\n"; }

inline void write_histogram_rows(std::ostream& out, double alpha, const std::string& set, const std::string& strategy,
                                 const Histogram& h) {
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << fmt_double(alpha) << "," << set << "," << strategy << "," << b << "," << fmt_double(h.edges[b]) << ","
        << fmt_double(h.edges[b + 1]) << "," << h.counts[b] << "\n";
}

inline void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& pts) {
  out << "path,step,moneyness,ttm,prev_hedge,bs_delta,nn_delta,difference\n";
  for (const auto& p : pts)
    out << p.path << "," << p.step << "," << fmt_double(p.moneyness) << "," << fmt_double(p.ttm) << ","
        << fmt_double(p.prev_hedge) << "," << fmt_double(p.bs_delta) << "," << fmt_double(p.nn_delta) << ","
        << fmt_double(p.difference()) << "\n";
}

inline void write_divergence_csv(std::ostream& out, const std::vector<DivergenceRow>& rows) {
  out << "alpha,n,mean_tc,se_tc,ratio,mean_cost\n";
  for (const auto& r : rows)
    out << fmt_double(r.alpha) << "," << r.n << "," << fmt_double(r.mean_tc) << "," << fmt_double(r.se_tc) << ","
        << fmt_double(r.ratio) << "," << fmt_double(r.mean_cost) << "\n";
}

inline json vol_stats_json(const VolStats& v) {
  return {{"min", v.min}, {"max", v.max}, {"mean", v.mean}, {"std", v.std}};
}

inline json experiment_config_json(const ExperimentConfig& c) {
  json doc;
  doc["S0"] = c.market.s0;
  doc["mu"] = c.market.mu;
  doc["sigma"] = c.market.sigma;
  doc["T"] = c.market.maturity_T;
  doc["r"] = c.market.r;
  doc["strike"] = c.strike;
  doc["steps"] = c.steps;
  doc["num_paths"] = c.n_paths;
  doc["alphas"] = c.alphas;
  doc["seed_value"] = c.train_seed;
  doc["test_seed"] = c.test_seed;
  doc["init_seed"] = c.init_seed;
  doc["epochs"] = c.epochs;
  doc["batch_size"] = c.batch_size;
  doc["lr"] = c.lr;
  doc["mode"] = to_string(c.mode);
  doc["source"] = to_string(c.source);
  if (c.source == DataSource::csv) {
    doc["csv_file"] = c.csv_file;
    doc["csv_column"] = c.csv_column;
  }
  doc["bins"] = c.bins;
  return doc;
}

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(experiment_config_json(c).dump()); }

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace hedgebench
