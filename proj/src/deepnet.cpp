#include "flowcast/deepnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace flowcast::nn {

using nlohmann::json;

std::string to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw ParamError("unknown activation '" + s + "' (want tanh or relu)");
}

void NetConfig::validate() const {
  if (input_dim < 1) throw ParamError("input_dim must be >= 1");
  if (output_dim < 1) throw ParamError("output_dim must be >= 1");
  for (int w : hidden_widths)
    if (w < 1) throw ParamError("hidden widths must be >= 1");
  if (penalty_weight < 0.0) throw ParamError("penalty weight must be >= 0");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw ParamError("dropout_p must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw ParamError("learning rate must be > 0");
  if (lr_decay < 0.0) throw ParamError("lr decay must be >= 0");
  if (batch_size < 1) throw ParamError("batch size must be >= 1");
  if (epochs < 0) throw ParamError("epochs must be >= 0");
}

std::size_t DeepNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size()) +
         static_cast<std::size_t>(biases[l].size());
  return n;
}

DeepNet init_network(const NetConfig& config) {
  config.validate();
  DeepNet net;
  net.config = config;
  Rng rng = Rng(config.seed).split("init");
  std::vector<int> dims;
  dims.push_back(config.input_dim);
  for (int w : config.hidden_widths) dims.push_back(w);
  dims.push_back(config.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd W(fan_out, fan_in);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        W(i, j) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(W));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

namespace {

inline void apply_activation(Eigen::MatrixXd& A, Activation act) {
  if (act == Activation::Tanh)
    A = A.array().tanh();
  else
    A = A.cwiseMax(0.0);
}

// derivative given post-activation values (tanh) / pre-activation sign (relu)
inline Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& post,
                                       const Eigen::MatrixXd& pre,
                                       Activation act) {
  if (act == Activation::Tanh) return (1.0 - post.array().square()).matrix();
  return (pre.array() > 0.0).cast<double>().matrix();  // subgradient 0 at 0
}

}  // namespace

ForwardResult forward(const DeepNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.config.input_dim)
    throw DataError("input length " + std::to_string(x.size()) +
                    " does not match input_dim " +
                    std::to_string(net.config.input_dim));
  ForwardResult out;
  Eigen::VectorXd z = x;
  const int H = net.n_hidden();
  for (int l = 0; l < H; ++l) {
    Eigen::VectorXd a = net.weights[static_cast<std::size_t>(l)] * z +
                        net.biases[static_cast<std::size_t>(l)];
    if (net.config.activation == Activation::Tanh)
      z = a.array().tanh();
    else
      z = a.cwiseMax(0.0);
    out.activations.push_back(z);
  }
  out.prediction = net.weights.back() * z + net.biases.back();
  return out;
}

DropoutMask draw_dropout_mask(const NetConfig& config, Rng& rng) {
  DropoutMask mask;
  const double keep = 1.0 - config.dropout_p;
  mask.input.resize(config.input_dim);
  for (Eigen::Index j = 0; j < mask.input.size(); ++j)
    mask.input[j] = rng.bernoulli(keep) ? 1.0 : 0.0;
  for (int w : config.hidden_widths) {
    Eigen::VectorXd h(w);
    for (Eigen::Index j = 0; j < h.size(); ++j)
      h[j] = rng.bernoulli(keep) ? 1.0 : 0.0;
    mask.hidden.push_back(std::move(h));
  }
  return mask;
}

std::pair<double, Gradients> loss_and_gradients(const DeepNet& net,
                                                const Eigen::MatrixXd& X,
                                                const Eigen::MatrixXd& Y,
                                                const DropoutMask* mask) {
  if (X.rows() == 0) throw DataError("empty batch");
  if (X.cols() != net.config.input_dim)
    throw DataError("batch width does not match input_dim");
  if (Y.rows() != X.rows() || Y.cols() != net.config.output_dim)
    throw DataError("target shape does not match");

  const int H = net.n_hidden();
  const double B = static_cast<double>(X.rows());
  const Activation act = net.config.activation;

  // forward, batch rows as samples
  Eigen::MatrixXd z = X;
  if (mask) z.array().rowwise() *= mask->input.transpose().array();
  std::vector<Eigen::MatrixXd> acts;  // post-activation per hidden layer
  std::vector<Eigen::MatrixXd> pres;  // pre-activation per hidden layer
  acts.reserve(static_cast<std::size_t>(H));
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  inputs.reserve(static_cast<std::size_t>(H) + 1);
  for (int l = 0; l < H; ++l) {
    inputs.push_back(z);
    Eigen::MatrixXd pre =
        z * net.weights[static_cast<std::size_t>(l)].transpose();
    pre.array().rowwise() +=
        net.biases[static_cast<std::size_t>(l)].transpose().array();
    Eigen::MatrixXd post = pre;
    apply_activation(post, act);
    if (mask)
      post.array().rowwise() *=
          mask->hidden[static_cast<std::size_t>(l)].transpose().array();
    pres.push_back(std::move(pre));
    acts.push_back(post);
    z = acts.back();
  }
  inputs.push_back(z);
  Eigen::MatrixXd yhat = z * net.weights.back().transpose();
  yhat.array().rowwise() += net.biases.back().transpose().array();

  Eigen::MatrixXd err = yhat - Y;
  double data_loss = err.squaredNorm() / B;

  // penalty
  const double lam = net.config.penalty_weight;
  double penalty = 0.0;
  if (lam > 0.0 && net.config.penalty_kind != Penalty::None) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      if (net.config.penalty_kind == Penalty::L2) {
        penalty += net.weights[l].squaredNorm() + net.biases[l].squaredNorm();
      } else {
        penalty += net.weights[l].cwiseAbs().sum() + net.biases[l].cwiseAbs().sum();
      }
    }
  }
  double loss = data_loss + lam * penalty;
  if (!std::isfinite(loss)) throw NumericError("loss is not finite");

  // backward
  Gradients g;
  g.weights.resize(net.weights.size());
  g.biases.resize(net.biases.size());
  Eigen::MatrixXd delta = (2.0 / B) * err;  // dL/d(yhat)
  for (int l = H; l >= 0; --l) {
    g.weights[static_cast<std::size_t>(l)] =
        delta.transpose() * inputs[static_cast<std::size_t>(l)];
    g.biases[static_cast<std::size_t>(l)] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = delta * net.weights[static_cast<std::size_t>(l)];
      delta.array() *= activation_grad(acts[static_cast<std::size_t>(l - 1)],
                                       pres[static_cast<std::size_t>(l - 1)], act)
                           .array();
      if (mask)
        delta.array().rowwise() *=
            mask->hidden[static_cast<std::size_t>(l - 1)].transpose().array();
    }
  }
  if (lam > 0.0 && net.config.penalty_kind != Penalty::None) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      if (net.config.penalty_kind == Penalty::L2) {
        g.weights[l] += 2.0 * lam * net.weights[l];
        g.biases[l] += 2.0 * lam * net.biases[l];
      } else {
        g.weights[l] += lam * net.weights[l].array().sign().matrix();
        g.biases[l] += lam * net.biases[l].array().sign().matrix();
      }
    }
  }
  return {loss, std::move(g)};
}

namespace {

double data_mse(const DeepNet& net, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Y, double weight_scale) {
  // forward with weights scaled by weight_scale (inference view mid-training)
  const int H = net.n_hidden();
  Eigen::MatrixXd z = X;
  for (int l = 0; l < H; ++l) {
    Eigen::MatrixXd pre =
        z * (weight_scale * net.weights[static_cast<std::size_t>(l)]).transpose();
    pre.array().rowwise() +=
        net.biases[static_cast<std::size_t>(l)].transpose().array();
    apply_activation(pre, net.config.activation);
    z = std::move(pre);
  }
  Eigen::MatrixXd yhat = z * (weight_scale * net.weights.back()).transpose();
  yhat.array().rowwise() += net.biases.back().transpose().array();
  return (yhat - Y).squaredNorm() / static_cast<double>(X.rows());
}

}  // namespace

DeepNet sgd_train(DeepNet net, const data::LagDesign& train,
                  const data::LagDesign& valid) {
  net.config.validate();
  if (train.cols() != net.config.input_dim || valid.cols() != net.config.input_dim)
    throw DataError("design width does not match input_dim");
  if (train.y.cols() != net.config.output_dim ||
      valid.y.cols() != net.config.output_dim)
    throw DataError("target width does not match output_dim");
  if (train.rows() == 0 || valid.rows() == 0)
    throw DataError("empty train or validation design");
  if (net.config.epochs == 0) return net;

  const double p = net.config.dropout_p;
  const double keep = 1.0 - p;
  Rng rng = Rng(net.config.seed).split("train");

  std::vector<int> order(static_cast<std::size_t>(train.rows()));
  std::iota(order.begin(), order.end(), 0);

  double best_valid = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best_w = net.weights;
  std::vector<Eigen::VectorXd> best_b = net.biases;

  long step = 0;
  for (int epoch = 0; epoch < net.config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(net.config.batch_size)) {
      std::size_t count = std::min(order.size() - start,
                                   static_cast<std::size_t>(net.config.batch_size));
      Eigen::MatrixXd Xb(static_cast<Eigen::Index>(count), train.cols());
      Eigen::MatrixXd Yb(static_cast<Eigen::Index>(count), train.y.cols());
      for (std::size_t i = 0; i < count; ++i) {
        Xb.row(static_cast<Eigen::Index>(i)) = train.X.row(order[start + i]);
        Yb.row(static_cast<Eigen::Index>(i)) = train.y.row(order[start + i]);
      }
      DropoutMask mask;
      const bool use_mask = p > 0.0;
      if (use_mask) mask = draw_dropout_mask(net.config, rng);
      auto [loss, grads] =
          loss_and_gradients(net, Xb, Yb, use_mask ? &mask : nullptr);
      if (!std::isfinite(loss) || loss > 1e12)
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch) + " (loss " +
                           format_double(loss) + ")");
      const double eta = net.config.learning_rate /
                         (1.0 + net.config.lr_decay * static_cast<double>(step));
      for (std::size_t l = 0; l < net.weights.size(); ++l) {
        net.weights[l] -= eta * grads.weights[l];
        net.biases[l] -= eta * grads.biases[l];
        if (!net.weights[l].allFinite() || !net.biases[l].allFinite())
          throw NumericError("parameters became non-finite at epoch " +
                             std::to_string(epoch));
      }
      ++step;
    }
    const double scale = p > 0.0 ? keep : 1.0;
    net.train_trace.push_back(data_mse(net, train.X, train.y, scale));
    double vmse = data_mse(net, valid.X, valid.y, scale);
    net.valid_trace.push_back(vmse);
    if (vmse < best_valid) {
      best_valid = vmse;
      best_w = net.weights;
      best_b = net.biases;
    }
  }
  net.weights = std::move(best_w);
  net.biases = std::move(best_b);
  if (p > 0.0) {
    for (auto& W : net.weights) W *= keep;
    net.dropout_scaled = true;
  }
  return net;
}

double dropout_ridge_penalty(const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& w, double p) {
  if (X.cols() != w.size()) throw DataError("shape mismatch");
  if (!(p >= 0.0 && p <= 1.0)) throw ParamError("p must be in [0, 1]");
  Eigen::VectorXd col_sq = X.array().square().colwise().sum();
  return p * (1.0 - p) * (col_sq.array() * w.array().square()).sum();
}

Eigen::MatrixXd predict(const DeepNet& net, const Eigen::MatrixXd& X) {
  if (X.cols() != net.config.input_dim)
    throw DataError("design width does not match input_dim");
  return [&] {
    const int H = net.n_hidden();
    Eigen::MatrixXd z = X;
    for (int l = 0; l < H; ++l) {
      Eigen::MatrixXd pre =
          z * net.weights[static_cast<std::size_t>(l)].transpose();
      pre.array().rowwise() +=
          net.biases[static_cast<std::size_t>(l)].transpose().array();
      apply_activation(pre, net.config.activation);
      z = std::move(pre);
    }
    Eigen::MatrixXd yhat = z * net.weights.back().transpose();
    yhat.array().rowwise() += net.biases.back().transpose().array();
    return yhat;
  }();
}

Eigen::MatrixXd predict(const DeepNet& net, const data::LagDesign& design) {
  return predict(net, design.X);
}

void save_json(const DeepNet& net, const std::string& path) {
  json j;
  j["format"] = "flowcast-dl";
  j["version"] = 1;
  json cfg;
  cfg["input_dim"] = net.config.input_dim;
  cfg["hidden_widths"] = net.config.hidden_widths;
  cfg["activation"] = to_string(net.config.activation);
  cfg["output_dim"] = net.config.output_dim;
  cfg["penalty_kind"] = net.config.penalty_kind == Penalty::None
                            ? "none"
                            : (net.config.penalty_kind == Penalty::L2 ? "l2" : "l1");
  cfg["penalty_weight"] = net.config.penalty_weight;
  cfg["dropout_p"] = net.config.dropout_p;
  cfg["learning_rate"] = net.config.learning_rate;
  cfg["lr_decay"] = net.config.lr_decay;
  cfg["batch_size"] = net.config.batch_size;
  cfg["epochs"] = net.config.epochs;
  cfg["seed"] = net.config.seed;
  j["config"] = cfg;
  j["dropout_scaled"] = net.dropout_scaled;
  json layers = json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    json layer;
    layer["rows"] = net.weights[l].rows();
    layer["cols"] = net.weights[l].cols();
    std::vector<double> w;  // row-major
    w.reserve(static_cast<std::size_t>(net.weights[l].size()));
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c)
        w.push_back(net.weights[l](r, c));
    layer["weights"] = w;
    layer["bias"] = std::vector<double>(net.biases[l].begin(), net.biases[l].end());
    layers.push_back(layer);
  }
  j["layers"] = layers;
  j["train_trace"] = net.train_trace;
  j["valid_trace"] = net.valid_trace;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

DeepNet load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad model JSON in '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "flowcast-dl" || j.value("version", 0) != 1)
    throw DataError("'" + path + "' is not a flowcast-dl v1 model");
  DeepNet net;
  const auto& cfg = j.at("config");
  net.config.input_dim = cfg.at("input_dim").get<int>();
  net.config.hidden_widths = cfg.at("hidden_widths").get<std::vector<int>>();
  net.config.activation = activation_from_string(cfg.at("activation").get<std::string>());
  net.config.output_dim = cfg.at("output_dim").get<int>();
  std::string pk = cfg.at("penalty_kind").get<std::string>();
  net.config.penalty_kind =
      pk == "none" ? Penalty::None : (pk == "l2" ? Penalty::L2 : Penalty::L1);
  net.config.penalty_weight = cfg.at("penalty_weight").get<double>();
  net.config.dropout_p = cfg.at("dropout_p").get<double>();
  net.config.learning_rate = cfg.at("learning_rate").get<double>();
  net.config.lr_decay = cfg.at("lr_decay").get<double>();
  net.config.batch_size = cfg.at("batch_size").get<int>();
  net.config.epochs = cfg.at("epochs").get<int>();
  net.config.seed = cfg.at("seed").get<std::uint64_t>();
  net.dropout_scaled = j.value("dropout_scaled", false);
  for (const auto& layer : j.at("layers")) {
    Eigen::Index rows = layer.at("rows").get<Eigen::Index>();
    Eigen::Index cols = layer.at("cols").get<Eigen::Index>();
    auto w = layer.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols)
      throw DataError("layer weight count mismatch in '" + path + "'");
    Eigen::MatrixXd W(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    net.weights.push_back(std::move(W));
    auto b = layer.at("bias").get<std::vector<double>>();
    net.biases.push_back(
        Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  }
  if (j.contains("train_trace"))
    net.train_trace = j.at("train_trace").get<std::vector<double>>();
  if (j.contains("valid_trace"))
    net.valid_trace = j.at("valid_trace").get<std::vector<double>>();
  return net;
}

}  // namespace flowcast::nn
