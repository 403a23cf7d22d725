/**
 * Copyright 2026 The pipesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pipesim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "pipesim/error.hpp"

namespace pipesim {

using nlohmann::json;

double LrSchedule::at(double base, std::int64_t epoch) const {
  if (kind == Kind::kConstant) return base;
  double lr = base;
  for (auto m : milestones) {
    if (epoch >= m) lr *= factor;
  }
  return lr;
}

std::vector<LayerSpec> ExperimentConfig::layers() const {
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    out.push_back({dims[i], dims[i + 1], i < activations.size() ? activations[i] : Activation::kLinear});
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (dims.size() < 2) throw ConfigError("need at least input and output dims", "model.dims");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 1) throw ConfigError("must be >= 1", "model.dims[" + std::to_string(i) + "]");
  }
  if (activations.size() != dims.size() - 1) {
    throw ConfigError("need one activation per layer (" + std::to_string(dims.size() - 1) + ")",
                      "model.activations");
  }
  const auto n_layers = static_cast<int>(dims.size() - 1);
  if (depth < 1 || depth > n_layers) {
    throw ConfigError("must lie in [1, " + std::to_string(n_layers) + "] (layer count)", "depth");
  }
  if (micro_batches < 1) throw ConfigError("must be >= 1", "micro_batches");
  if (schedule != ScheduleKind::kGPipe && micro_batches != 1) {
    throw ConfigError("micro-batching applies to the gpipe schedule only", "micro_batches");
  }
  validate_strategy(strategy, schedule, optimizer.tag, depth);
  optimizer.validate();
  if (lr_schedule.kind == LrSchedule::Kind::kStep) {
    if (!(lr_schedule.factor > 0.0)) throw ConfigError("must be > 0", "lr_schedule.factor");
    for (std::size_t i = 0; i < lr_schedule.milestones.size(); ++i) {
      if (lr_schedule.milestones[i] < 1 || (i > 0 && lr_schedule.milestones[i] <= lr_schedule.milestones[i - 1])) {
        throw ConfigError("milestones must be positive and increasing", "lr_schedule.epochs");
      }
    }
  }
  dataset.validate();
  if (dims.front() != dataset.input_dim) {
    throw ConfigError("input dim " + std::to_string(dims.front()) + " != dataset.input_dim " +
                          std::to_string(dataset.input_dim),
                      "model.dims[0]");
  }
  if (dims.back() != dataset.output_dim()) {
    throw ConfigError("output dim " + std::to_string(dims.back()) + " != dataset output dim " +
                          std::to_string(dataset.output_dim()),
                      "model.dims[" + std::to_string(dims.size() - 1) + "]");
  }
  if (epochs < 1) throw ConfigError("must be >= 1", "epochs");
  const std::size_t n_train = (dataset.n_samples * 4) / 5;
  if (batch_size < 1 || batch_size > n_train) {
    throw ConfigError("must lie in [1, " + std::to_string(n_train) + "] (training split)", "batch_size");
  }
  if (batch_size % static_cast<std::size_t>(micro_batches) != 0) {
    throw ConfigError("batch_size must divide evenly into micro_batches", "micro_batches");
  }
}

namespace {

// Typed field access with path-qualified errors.
class Reader {
 public:
  Reader(const json &j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
    for (const auto &[k, v] : j_.items()) {
      if (!allowed.count(k)) throw ConfigError("unknown field", at(k));
    }
  }
  std::string at(const std::string &k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string &k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json &raw(const std::string &k) const { return j_.at(k); }

  template <typename T>
  T get(const std::string &k, T fallback) const {
    if (!has(k)) return fallback;
    return as<T>(j_.at(k), at(k));
  }
  template <typename T>
  T require(const std::string &k) const {
    if (!has(k)) throw ConfigError("required field missing", at(k));
    return as<T>(j_.at(k), at(k));
  }

  template <typename T>
  static T as(const json &v, const std::string &path) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("expected a string", path);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("expected a number", path);
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("expected an integer", path);
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        throw ConfigError("expected a non-negative integer", path);
      }
    }
    return v.get<T>();
  }

 private:
  const json &j_;
  std::string path_;
};

OptimizerKind parse_optimizer_json(const json &j) {
  Reader r(j, "optimizer",
           {"kind", "lr", "momentum", "dampening", "weight_decay", "beta1", "beta2", "eps", "decoupled_decay"});
  OptimizerKind o;
  o.tag = parse_optimizer(r.require<std::string>("kind"));
  o.lr = r.get("lr", o.lr);
  o.momentum = r.get("momentum", o.momentum);
  o.dampening = r.get("dampening", o.dampening);
  o.weight_decay = r.get("weight_decay", o.weight_decay);
  o.beta1 = r.get("beta1", o.beta1);
  o.beta2 = r.get("beta2", o.beta2);
  o.eps = r.get("eps", o.eps);
  o.decoupled_decay = r.get("decoupled_decay", o.decoupled_decay);
  return o;
}

}  // namespace

ExperimentConfig parse_config(const json &j) {
  Reader r(j, "",
           {"seed", "model", "depth", "schedule", "micro_batches", "strategy", "optimizer", "lr_schedule",
            "dataset", "epochs", "batch_size"});
  ExperimentConfig c;
  c.seed = r.get<std::uint64_t>("seed", c.seed);

  if (!r.has("model")) throw ConfigError("required field missing", "model");
  Reader m(r.raw("model"), "model", {"dims", "activations"});
  if (!m.has("dims") || !m.raw("dims").is_array()) throw ConfigError("expected an array", "model.dims");
  c.dims.clear();
  for (std::size_t i = 0; i < m.raw("dims").size(); ++i) {
    c.dims.push_back(Reader::as<std::size_t>(m.raw("dims")[i], "model.dims[" + std::to_string(i) + "]"));
  }
  c.activations.clear();
  if (m.has("activations")) {
    const json &acts = m.raw("activations");
    if (acts.is_string()) {
      // One activation for every hidden layer; the output layer is linear.
      for (std::size_t i = 0; i + 2 < c.dims.size(); ++i) c.activations.push_back(parse_activation(acts.get<std::string>()));
      c.activations.push_back(Activation::kLinear);
    } else if (acts.is_array()) {
      for (std::size_t i = 0; i < acts.size(); ++i) {
        c.activations.push_back(
            parse_activation(Reader::as<std::string>(acts[i], "model.activations[" + std::to_string(i) + "]")));
      }
    } else {
      throw ConfigError("expected a string or an array", "model.activations");
    }
  } else {
    for (std::size_t i = 0; i + 2 < c.dims.size(); ++i) c.activations.push_back(Activation::kTanh);
    if (c.dims.size() >= 2) c.activations.push_back(Activation::kLinear);
  }

  c.strategy = parse_strategy(r.require<std::string>("strategy"));
  c.depth = r.get("depth", c.strategy == StrategyKind::kSerial ? 1 : c.depth);
  c.schedule = r.has("schedule") ? parse_schedule(r.require<std::string>("schedule")) : schedule_for(c.strategy);
  c.micro_batches = r.get("micro_batches", 1);
  if (!r.has("optimizer")) throw ConfigError("required field missing", "optimizer");
  c.optimizer = parse_optimizer_json(r.raw("optimizer"));

  if (r.has("lr_schedule")) {
    Reader l(r.raw("lr_schedule"), "lr_schedule", {"kind", "factor", "epochs"});
    const auto kind = l.require<std::string>("kind");
    if (kind == "constant") {
      c.lr_schedule.kind = LrSchedule::Kind::kConstant;
    } else if (kind == "step") {
      c.lr_schedule.kind = LrSchedule::Kind::kStep;
    } else {
      throw ConfigError("expected 'constant' or 'step'", "lr_schedule.kind");
    }
    c.lr_schedule.factor = l.get("factor", c.lr_schedule.factor);
    if (l.has("epochs")) {
      if (!l.raw("epochs").is_array()) throw ConfigError("expected an array", "lr_schedule.epochs");
      for (std::size_t i = 0; i < l.raw("epochs").size(); ++i) {
        c.lr_schedule.milestones.push_back(
            Reader::as<std::int64_t>(l.raw("epochs")[i], "lr_schedule.epochs[" + std::to_string(i) + "]"));
      }
    }
  }

  if (!r.has("dataset")) throw ConfigError("required field missing", "dataset");
  Reader d(r.raw("dataset"), "dataset", {"kind", "n_samples", "input_dim", "classes", "noise", "seed"});
  c.dataset.kind = parse_dataset_kind(d.require<std::string>("kind"));
  c.dataset.n_samples = d.get("n_samples", c.dataset.n_samples);
  c.dataset.input_dim = d.get("input_dim", c.dataset.kind == DatasetKind::kTwoSpirals ? std::size_t{2} : c.dataset.input_dim);
  c.dataset.classes = d.get("classes", c.dataset.classes);
  c.dataset.noise = d.get("noise", c.dataset.noise);
  if (d.has("seed")) c.dataset.seed = d.require<std::uint64_t>("seed");

  c.epochs = r.get("epochs", c.epochs);
  c.batch_size = r.get("batch_size", c.batch_size);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("malformed JSON in '") + path + "': " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig &c) {
  json acts = json::array();
  for (auto a : c.activations) acts.push_back(to_string(a));
  json opt = {{"kind", to_string(c.optimizer.tag)},
              {"lr", c.optimizer.lr},
              {"momentum", c.optimizer.momentum},
              {"dampening", c.optimizer.dampening},
              {"weight_decay", c.optimizer.weight_decay},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"eps", c.optimizer.eps},
              {"decoupled_decay", c.optimizer.decoupled_decay}};
  json lr = {{"kind", c.lr_schedule.kind == LrSchedule::Kind::kConstant ? "constant" : "step"},
             {"factor", c.lr_schedule.factor},
             {"epochs", c.lr_schedule.milestones}};
  json ds = {{"kind", to_string(c.dataset.kind)},
             {"n_samples", c.dataset.n_samples},
             {"input_dim", c.dataset.input_dim},
             {"classes", c.dataset.classes},
             {"noise", c.dataset.noise}};
  if (c.dataset.seed) ds["seed"] = *c.dataset.seed;
  return {{"seed", c.seed},
          {"model", {{"dims", c.dims}, {"activations", acts}}},
          {"depth", c.depth},
          {"schedule", to_string(c.schedule)},
          {"micro_batches", c.micro_batches},
          {"strategy", to_string(c.strategy)},
          {"optimizer", opt},
          {"lr_schedule", lr},
          {"dataset", ds},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size}};
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const ExperimentConfig &c) { return hex64(fnv1a(to_json(c).dump())); }

}  // namespace pipesim
