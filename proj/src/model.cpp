#include "graphsim/model.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "graphsim/error.hpp"

namespace graphsim {

const char* to_string(DynamicsFields f) {
  switch (f) {
    case DynamicsFields::None: return "none";
    case DynamicsFields::Location: return "loc";
    case DynamicsFields::Velocity: return "vel";
    case DynamicsFields::Both: return "loc+vel";
  }
  return "none";
}

DynamicsFields parse_dynamics_fields(const std::string& s) {
  if (s == "none") return DynamicsFields::None;
  if (s == "loc") return DynamicsFields::Location;
  if (s == "vel") return DynamicsFields::Velocity;
  if (s == "loc+vel") return DynamicsFields::Both;
  throw ConfigError("unknown dynamics field set '" + s + "' (none|loc|vel|loc+vel)");
}

void ModelConfig::validate() const {
  if (feature_dim != kFeatureSize) throw ConfigError("model.feature_dim must be 35");
  if (spatial_hidden < 1 || graph_out < 1 || graph_lstm < 1 || attention_dim < 1) {
    throw ConfigError("model widths must be >= 1");
  }
  if (use_ped_dynamics && ped_lstm < 1) throw ConfigError("model.ped_lstm must be >= 1");
  if (use_ego_dynamics && ego_lstm < 1) throw ConfigError("model.ego_lstm must be >= 1");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
}

Tensor encode_dynamics(const RoadUser& user, const ObservationWindow& window, bool recenter) {
  const std::size_t T = static_cast<std::size_t>(window.length);
  Tensor out({T, 4});
  Vec2 origin;
  for (std::size_t k = 0; k < T; ++k) {
    const int t = window.first_frame + static_cast<int>(k);
    if (!user.present(t)) {
      throw DataError("dynamics: '" + user.id + "' absent at frame " + std::to_string(t));
    }
    const Vec2 loc = user.states[t].location;
    if (k == 0 && recenter) origin = loc;
    const Vec2 vel = k == 0 ? Vec2{} : compute_velocity(user, t);
    out.at(k, 0) = loc.x - origin.x;
    out.at(k, 1) = loc.y - origin.y;
    out.at(k, 2) = kVelocityScale * vel.x;
    out.at(k, 3) = kVelocityScale * vel.y;
  }
  return out;
}

Sample make_sample(const Scene& scene, const ObservationWindow& window,
                   const NormalizationManifest& manifest, const GraphOptions& options,
                   bool recenter_dynamics) {
  Sample s;
  s.graph = build_window_graph(scene, window, manifest, options);
  const RoadUser* ped = scene.find_user(window.target_id);
  s.ped_dynamics = encode_dynamics(*ped, window, recenter_dynamics);
  s.ego_dynamics = encode_dynamics(scene.ego, window, recenter_dynamics);
  s.label = window.label;
  s.pedestrian_key = scene.name + ":" + window.target_id;
  return s;
}

GraphSimModel::GraphSimModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t C1 = config_.spatial_hidden;
  const std::size_t Q = config_.graph_out;
  W1_ = nn::Parameter("graph.W1", Tensor({config_.feature_dim, C1}));
  W2_ = nn::Parameter("graph.W2", Tensor({C1, Q}));
  a1_ = nn::Parameter("graph.prelu1", Tensor({1}, 0.25));
  K_ = nn::Parameter("graph.temporal_kernel", Tensor({Q, 3}));
  kb_ = nn::Parameter("graph.temporal_bias", Tensor({Q}));
  a2_ = nn::Parameter("graph.prelu2", Tensor({1}, 0.25));
  graph_lstm_ = nn::Lstm("graph_lstm", Q, config_.graph_lstm);
  if (config_.use_ped_dynamics) ped_lstm_ = nn::Lstm("ped_lstm", 4, config_.ped_lstm);
  if (config_.use_ego_dynamics) ego_lstm_ = nn::Lstm("ego_lstm", 4, config_.ego_lstm);
  attention_ = nn::Attention("attention", recurrent_width(), config_.attention_dim);
  dense_w_ = nn::Parameter("dense.w", Tensor({recurrent_width()}));
  dense_b_ = nn::Parameter("dense.b", Tensor({1}));

  std::mt19937_64 rng(config_.seed);
  nn::glorot_uniform(W1_.value, config_.feature_dim, C1, rng);
  nn::glorot_uniform(W2_.value, C1, Q, rng);
  nn::glorot_uniform(K_.value, 3, 3, rng);
  graph_lstm_.init(rng);
  if (config_.use_ped_dynamics) ped_lstm_.init(rng);
  if (config_.use_ego_dynamics) ego_lstm_.init(rng);
  attention_.init(rng);
  nn::glorot_uniform(dense_w_.value, recurrent_width(), 1, rng);
}

std::size_t GraphSimModel::recurrent_width() const {
  return config_.graph_lstm + (config_.use_ped_dynamics ? config_.ped_lstm : 0) +
         (config_.use_ego_dynamics ? config_.ego_lstm : 0);
}

std::vector<nn::Parameter*> GraphSimModel::parameters() {
  std::vector<nn::Parameter*> out{&W1_, &a1_, &W2_, &K_, &kb_, &a2_};
  for (auto* p : graph_lstm_.parameters()) out.push_back(p);
  if (config_.use_ped_dynamics)
    for (auto* p : ped_lstm_.parameters()) out.push_back(p);
  if (config_.use_ego_dynamics)
    for (auto* p : ego_lstm_.parameters()) out.push_back(p);
  for (auto* p : attention_.parameters()) out.push_back(p);
  out.push_back(&dense_w_);
  out.push_back(&dense_b_);
  return out;
}

std::vector<const nn::Parameter*> GraphSimModel::parameters() const {
  auto mut = const_cast<GraphSimModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void GraphSimModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

Tensor GraphSimModel::mask_dynamics(const Tensor& dyn, DynamicsFields fields) const {
  Tensor out = dyn;
  const bool keep_loc = fields == DynamicsFields::Location || fields == DynamicsFields::Both;
  const bool keep_vel = fields == DynamicsFields::Velocity || fields == DynamicsFields::Both;
  for (std::size_t t = 0; t < out.dim(0); ++t) {
    if (!keep_loc) out.at(t, 0) = out.at(t, 1) = 0.0;
    if (!keep_vel) out.at(t, 2) = out.at(t, 3) = 0.0;
  }
  return out;
}

namespace {

Tensor row_matrix(const Tensor& A, std::size_t row) {
  const std::size_t n = A.dim(1);
  Tensor r({1, n});
  std::copy_n(A.data() + row * n, n, r.data());
  return r;
}

}  // namespace

double GraphSimModel::forward(const Sample& sample, Trace* trace) const {
  const GraphTensors& g = sample.graph;
  const std::size_t T = g.frames();
  const std::size_t N = g.nodes();
  if (T == 0 || N == 0) throw ComputeError("forward: empty graph");
  if (g.V.dim(1) != config_.feature_dim) {
    throw ComputeError("forward: feature width " + std::to_string(g.V.dim(1)) +
                       " does not match model");
  }
  if (g.node_ids.empty() || g.node_ids[0].empty()) {
    throw ComputeError("forward: target pedestrian must be node 0");
  }
  if (sample.ped_dynamics.rank() != 2 || sample.ped_dynamics.dim(0) != T ||
      sample.ego_dynamics.rank() != 2 || sample.ego_dynamics.dim(0) != T) {
    throw ComputeError("forward: dynamics length does not match graph frames");
  }
  Trace local;
  Trace& tr = trace != nullptr ? *trace : local;
  tr = Trace{};
  tr.T = T;
  const std::size_t Q = config_.graph_out;
  tr.Z2 = Tensor({T, 1, Q});
  tr.conv1.resize(T);
  tr.conv2.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    tr.A.push_back(normalize_adjacency(g.frame_adjacency(t), config_.adjacency));
    const Tensor X = g.frame_features(t);
    tr.Z1.push_back(nn::graph_conv_forward(tr.A[t], X, W1_.value, &tr.conv1[t]));
    const Tensor Y1 = nn::prelu_forward(tr.Z1[t], a1_.value[0]);
    // Only the target node's embedding is consumed downstream.
    const Tensor z2 = nn::graph_conv_forward(row_matrix(tr.A[t], 0), Y1, W2_.value, &tr.conv2[t]);
    std::copy_n(z2.data(), Q, tr.Z2.data() + t * Q);
  }
  tr.Z3 = nn::temporal_conv_frames(tr.Z2, K_.value, kb_.value);
  tr.P = Tensor({T, Q}, std::vector<double>(tr.Z3.values().begin(), tr.Z3.values().end()));
  tr.P = nn::prelu_forward(tr.P, a2_.value[0]);

  const Tensor Hg = graph_lstm_.forward(tr.P, &tr.graph_lstm);
  Tensor Hp, He;
  if (config_.use_ped_dynamics) {
    tr.ped_in = mask_dynamics(sample.ped_dynamics, config_.ped_fields);
    Hp = ped_lstm_.forward(tr.ped_in, &tr.ped_lstm);
  }
  if (config_.use_ego_dynamics) {
    tr.ego_in = mask_dynamics(sample.ego_dynamics, config_.ego_fields);
    He = ego_lstm_.forward(tr.ego_in, &tr.ego_lstm);
  }
  const std::size_t F = recurrent_width();
  tr.Hcat = Tensor({T, F});
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t col = 0;
    for (const Tensor* part : std::initializer_list<const Tensor*>{&Hg, &Hp, &He}) {
      if (part->size() == 0) continue;
      const std::size_t w = part->dim(1);
      std::copy_n(part->data() + t * w, w, tr.Hcat.data() + t * F + col);
      col += w;
    }
  }
  tr.context = attention_.forward(tr.Hcat, &tr.attention);
  double logit = dense_b_.value[0];
  for (std::size_t f = 0; f < F; ++f) logit += dense_w_.value[f] * tr.context[f];
  tr.logit = logit;
  tr.probability = nn::sigmoid(logit);
  tr.valid = true;
  return tr.probability;
}

void GraphSimModel::backward(const Trace& tr, double dlogit) {
  if (!tr.valid) throw ComputeError("backward called before forward");
  const std::size_t T = tr.T;
  const std::size_t F = recurrent_width();
  const std::size_t Q = config_.graph_out;

  Tensor dctx({F});
  for (std::size_t f = 0; f < F; ++f) {
    dense_w_.grad[f] += dlogit * tr.context[f];
    dctx[f] = dlogit * dense_w_.value[f];
  }
  dense_b_.grad[0] += dlogit;
  dense_w_.has_grad = dense_b_.has_grad = true;

  const Tensor dH = attention_.backward(tr.attention, dctx);
  auto slice = [&](std::size_t col, std::size_t width) {
    Tensor out({T, width});
    for (std::size_t t = 0; t < T; ++t) std::copy_n(dH.data() + t * F + col, width, out.data() + t * width);
    return out;
  };
  std::size_t col = 0;
  const Tensor dHg = slice(col, config_.graph_lstm);
  col += config_.graph_lstm;
  if (config_.use_ped_dynamics) {
    ped_lstm_.backward(tr.ped_lstm, slice(col, config_.ped_lstm));
    col += config_.ped_lstm;
  }
  if (config_.use_ego_dynamics) {
    ego_lstm_.backward(tr.ego_lstm, slice(col, config_.ego_lstm));
  }
  const Tensor dP = graph_lstm_.backward(tr.graph_lstm, dHg);

  const Tensor Z3flat({T, Q}, std::vector<double>(tr.Z3.values().begin(), tr.Z3.values().end()));
  const Tensor dZ3flat = nn::prelu_backward(Z3flat, a2_.value[0], dP, a2_.grad[0]);
  const Tensor dZ3({T, 1, Q}, std::vector<double>(dZ3flat.values().begin(), dZ3flat.values().end()));
  const Tensor dZ2 = nn::temporal_conv_frames_backward(tr.Z2, K_.value, dZ3, K_.grad, kb_.grad);

  for (std::size_t t = 0; t < T; ++t) {
    const Tensor dz2({1, Q}, std::vector<double>(dZ2.data() + t * Q, dZ2.data() + (t + 1) * Q));
    const Tensor dY1 = nn::graph_conv_backward(tr.conv2[t], W2_.value, dz2, W2_.grad);
    const Tensor dZ1 = nn::prelu_backward(tr.Z1[t], a1_.value[0], dY1, a1_.grad[0]);
    nn::graph_conv_backward(tr.conv1[t], W1_.value, dZ1, W1_.grad);
  }
  for (auto* p : {&W1_, &a1_, &W2_, &K_, &kb_, &a2_}) p->has_grad = true;
}

TrainResult train(const std::vector<Sample>& samples, const ModelConfig& model_config,
                  const TrainConfig& train_config, const NormalizationManifest& manifest,
                  std::uint64_t config_hash, std::string run_config) {
  train_config.validate();
  if (samples.empty()) throw DataError("training set is empty");
  std::size_t positives = 0;
  for (const auto& s : samples) positives += s.label == 1 ? 1 : 0;
  const std::size_t negatives = samples.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("training set must contain both classes (positive " +
                    std::to_string(positives) + ", negative " + std::to_string(negatives) + ")");
  }
  TrainResult result;
  if (train_config.class_weighting) {
    result.weights.positive = static_cast<double>(negatives) / static_cast<double>(positives);
  }
  GraphSimModel model(model_config);
  nn::Adam adam(train_config.learning_rate);
  std::mt19937_64 rng(train_config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t global_step = 0;
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      double loss = 0.0;
      GraphSimModel::Trace trace;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = samples[order[k]];
        const double p = model.forward(s, &trace);
        loss += nn::bce_loss(p, s.label, result.weights);
        model.backward(trace, scale * nn::bce_grad_logit(p, s.label, result.weights));
      }
      adam.step(model.parameters());
      result.log.push_back({epoch + 1, ++global_step, loss * scale});
    }
  }
  result.checkpoint = make_checkpoint(model, manifest, config_hash, std::move(run_config));
  return result;
}

std::string train_log_csv(const std::vector<TrainLogEntry>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,step,loss\n";
  for (const auto& e : log) os << e.epoch << "," << e.step << "," << e.loss << "\n";
  return os.str();
}

Checkpoint make_checkpoint(const GraphSimModel& model, const NormalizationManifest& manifest,
                           std::uint64_t config_hash, std::string run_config) {
  Checkpoint c;
  c.model = model.config();
  c.manifest = manifest;
  c.config_hash = config_hash;
  c.run_config = std::move(run_config);
  for (const auto* p : model.parameters()) {
    nn::Parameter copy(p->name, p->value);
    c.parameters.push_back(std::move(copy));
  }
  return c;
}

GraphSimModel model_from_checkpoint(const Checkpoint& ckpt) {
  GraphSimModel model(ckpt.model);
  auto params = model.parameters();
  if (params.size() != ckpt.parameters.size()) {
    throw DataError("checkpoint has " + std::to_string(ckpt.parameters.size()) +
                    " parameters, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const nn::Parameter& src = ckpt.parameters[i];
    if (src.name != params[i]->name || src.value.shape() != params[i]->value.shape()) {
      throw DataError("checkpoint parameter '" + src.name + "' does not match model '" +
                      params[i]->name + "'");
    }
    params[i]->value = src.value;
  }
  return model;
}

Prediction predict(const GraphSimModel& model, const NormalizationManifest& manifest,
                   const Sample& sample) {
  if (!(sample.graph.manifest == manifest)) {
    throw DataError("sample was built with a different normalization manifest");
  }
  const double p = model.forward(sample);
  return {p, p >= 0.5 ? 1 : 0};
}

Prediction predict(const Checkpoint& ckpt, const Sample& sample) {
  return predict(model_from_checkpoint(ckpt), ckpt.manifest, sample);
}

}  // namespace graphsim
