#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "flowcast/deepnet.hpp"
#include "support/oracles.hpp"

using namespace flowcast;

namespace {

nn::NetConfig small_config(int input, std::vector<int> hidden, int output = 1) {
  nn::NetConfig cfg;
  cfg.input_dim = input;
  cfg.hidden_widths = std::move(hidden);
  cfg.output_dim = output;
  cfg.seed = 99;
  return cfg;
}

data::LagDesign design_from(const Eigen::MatrixXd& X, const Eigen::MatrixXd& y) {
  data::LagDesign d;
  d.X = X;
  d.y = y;
  d.lag_count = 1;
  d.horizon = 1;
  d.target_sensors = {0};
  d.row_days.assign(static_cast<std::size_t>(X.rows()), 0);
  d.row_times.resize(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    d.row_times[static_cast<std::size_t>(r)] = r;
  return d;
}

// central finite differences over every parameter
double max_grad_rel_error(nn::DeepNet& net, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& Y) {
  auto [loss, grads] = nn::loss_and_gradients(net, X, Y);
  (void)loss;
  const double h = 1e-5;
  double worst = 0.0;
  auto check_one = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    double up = nn::loss_and_gradients(net, X, Y).first;
    param = saved - h;
    double down = nn::loss_and_gradients(net, X, Y).first;
    param = saved;
    double numeric = (up - down) / (2.0 * h);
    double rel = std::abs(analytic - numeric) /
                 std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j)
        check_one(net.weights[l](i, j), grads.weights[l](i, j));
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
      check_one(net.biases[l][i], grads.biases[l][i]);
  }
  return worst;
}

}  // namespace

TEST_CASE("init_network") {
  SUBCASE("same seed twice gives bit-identical parameters") {
    auto cfg = small_config(6, {5, 3});
    auto a = nn::init_network(cfg);
    auto b = nn::init_network(cfg);
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
      CHECK((a.weights[l].array() == b.weights[l].array()).all());
      CHECK((a.biases[l].array() == b.biases[l].array()).all());
    }
  }
  SUBCASE("shape chaining for hidden [7,3], input 120, output 1") {
    auto net = nn::init_network(small_config(120, {7, 3}));
    REQUIRE(net.weights.size() == 3);
    CHECK(net.weights[0].rows() == 7);
    CHECK(net.weights[0].cols() == 120);
    CHECK(net.weights[1].rows() == 3);
    CHECK(net.weights[1].cols() == 7);
    CHECK(net.weights[2].rows() == 1);
    CHECK(net.weights[2].cols() == 3);
  }
  SUBCASE("empty hidden widths is a pure linear model") {
    auto net = nn::init_network(small_config(4, {}));
    REQUIRE(net.weights.size() == 1);
    CHECK(net.weights[0].rows() == 1);
    CHECK(net.weights[0].cols() == 4);
  }
  SUBCASE("zero input dim errors") {
    CHECK_THROWS_AS(nn::init_network(small_config(0, {3})), ParamError);
  }
  SUBCASE("biases start at zero; weights inside the fan bound") {
    auto net = nn::init_network(small_config(10, {6}));
    CHECK(net.biases[0].cwiseAbs().maxCoeff() == 0.0);
    const double bound0 = std::sqrt(6.0 / (10 + 6));
    CHECK(net.weights[0].cwiseAbs().maxCoeff() <= bound0);
  }
}

TEST_CASE("forward") {
  SUBCASE("all-zero tanh net outputs zero") {
    auto net = nn::init_network(small_config(3, {4}));
    for (auto& w : net.weights) w.setZero();
    auto out = nn::forward(net, Eigen::Vector3d(1.0, -2.0, 3.0));
    CHECK(out.prediction[0] == 0.0);
  }
  SUBCASE("linear net computes w.x + b exactly") {
    auto net = nn::init_network(small_config(3, {}));
    net.weights[0] << 1.0, -2.0, 0.5;
    net.biases[0][0] = 0.25;
    auto out = nn::forward(net, Eigen::Vector3d(2.0, 1.0, 4.0));
    CHECK(out.prediction[0] == doctest::Approx(2.0 - 2.0 + 2.0 + 0.25));
  }
  SUBCASE("single tanh unit at zero input passes only the final bias") {
    auto net = nn::init_network(small_config(1, {1}));
    net.weights[0](0, 0) = 1.0;
    net.biases[0][0] = 0.0;
    net.weights[1](0, 0) = 3.0;
    net.biases[1][0] = -1.5;
    auto out = nn::forward(net, Eigen::VectorXd::Zero(1));
    CHECK(out.activations[0][0] == 0.0);
    CHECK(out.prediction[0] == -1.5);
  }
  SUBCASE("dimension mismatch errors") {
    auto net = nn::init_network(small_config(3, {2}));
    CHECK_THROWS_AS(nn::forward(net, Eigen::VectorXd::Zero(4)), DataError);
  }
}

TEST_CASE("loss_and_gradients") {
  SUBCASE("linear net, batch of one: hand derivative") {
    auto net = nn::init_network(small_config(3, {}));
    net.weights[0] << 0.5, -1.0, 2.0;
    net.biases[0][0] = 0.1;
    Eigen::MatrixXd X(1, 3);
    X << 1.0, 2.0, -1.0;
    Eigen::MatrixXd Y(1, 1);
    Y << 4.0;
    auto [loss, grads] = nn::loss_and_gradients(net, X, Y);
    const double yhat = 0.5 - 2.0 - 2.0 + 0.1;
    CHECK(loss == doctest::Approx((4.0 - yhat) * (4.0 - yhat)));
    // loss is (y - yhat)^2, so d/dw = -2 (y - yhat) x; the 1/2-scaled
    // convention's -(y - yhat) x is exactly half of this
    for (int j = 0; j < 3; ++j)
      CHECK(grads.weights[0](0, j) ==
            doctest::Approx(-2.0 * (4.0 - yhat) * X(0, j)));
    CHECK(grads.biases[0][0] == doctest::Approx(-2.0 * (4.0 - yhat)));
  }
  SUBCASE("gradients match central differences (tanh, penalties)") {
    Rng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
      auto cfg = small_config(4, {5, 3});
      cfg.seed = 100 + static_cast<std::uint64_t>(trial);
      cfg.penalty_kind = trial == 1 ? nn::Penalty::L2
                                    : (trial == 2 ? nn::Penalty::L1 : nn::Penalty::None);
      cfg.penalty_weight = trial == 0 ? 0.0 : 1e-3;
      auto net = nn::init_network(cfg);
      Eigen::MatrixXd X(6, 4), Y(6, 1);
      for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
      for (Eigen::Index i = 0; i < Y.size(); ++i) Y(i) = rng.normal();
      CHECK(max_grad_rel_error(net, X, Y) < 1e-5);
    }
  }
  SUBCASE("relu gradients away from the kink") {
    auto cfg = small_config(3, {6, 4});
    cfg.activation = nn::Activation::Relu;
    cfg.seed = 7;
    auto net = nn::init_network(cfg);
    for (auto& b : net.biases) b.array() += 0.5;  // push pre-activations off 0
    Eigen::MatrixXd X(5, 3), Y(5, 1);
    Rng rng(11);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal() + 1.0;
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y(i) = rng.normal();
    CHECK(max_grad_rel_error(net, X, Y) < 1e-5);
  }
  SUBCASE("penalty adds exactly lambda * phi") {
    auto cfg = small_config(4, {3});
    auto net0 = nn::init_network(cfg);
    auto cfg2 = cfg;
    cfg2.penalty_kind = nn::Penalty::L2;
    cfg2.penalty_weight = 0.37;
    auto net1 = net0;
    net1.config = cfg2;
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 4);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Random(5, 1);
    double base = nn::loss_and_gradients(net0, X, Y).first;
    double with_penalty = nn::loss_and_gradients(net1, X, Y).first;
    double phi = 0.0;
    for (std::size_t l = 0; l < net0.weights.size(); ++l)
      phi += net0.weights[l].squaredNorm() + net0.biases[l].squaredNorm();
    CHECK(with_penalty == doctest::Approx(base + 0.37 * phi).epsilon(1e-12));
  }
  SUBCASE("dropout mask silences units forward and backward") {
    auto cfg = small_config(4, {3});
    auto net = nn::init_network(cfg);
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 4);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Random(4, 1);
    nn::DropoutMask mask;
    mask.input = Eigen::VectorXd::Ones(4);
    mask.input[2] = 0.0;
    mask.hidden.push_back(Eigen::VectorXd::Ones(3));
    auto [loss, grads] = nn::loss_and_gradients(net, X, Y, &mask);
    (void)loss;
    // gradients w.r.t. weights from the dropped input column vanish
    for (int i = 0; i < 3; ++i) CHECK(grads.weights[0](i, 2) == 0.0);
    // and a changed dropped input does not change the loss
    Eigen::MatrixXd X2 = X;
    X2.col(2).array() += 100.0;
    CHECK(nn::loss_and_gradients(net, X2, Y, &mask).first ==
          doctest::Approx(loss));
  }
}

TEST_CASE("sgd_train") {
  Rng rng(2);
  Eigen::MatrixXd X(240, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
  Eigen::VectorXd beta(3);
  beta << 0.4, -0.3, 0.2;
  Eigen::MatrixXd y = X * beta;
  y.array() += 0.15;
  auto train = design_from(X.topRows(180), y.topRows(180));
  auto valid = design_from(X.bottomRows(60), y.bottomRows(60));

  SUBCASE("zero epochs leaves parameters unchanged") {
    auto cfg = small_config(3, {4});
    cfg.epochs = 0;
    auto net = nn::init_network(cfg);
    auto before = net.weights;
    auto trained = nn::sgd_train(net, train, valid);
    for (std::size_t l = 0; l < before.size(); ++l)
      CHECK((trained.weights[l].array() == before[l].array()).all());
  }
  SUBCASE("linear net reaches the OLS fit on noiseless linear data") {
    auto cfg = small_config(3, {});
    cfg.epochs = 200;
    cfg.learning_rate = 0.05;
    cfg.lr_decay = 0.0;
    auto trained = nn::sgd_train(nn::init_network(cfg), train, valid);
    CHECK(trained.train_trace.back() < 1e-4);
    // OLS oracle: exact interpolation, zero MSE
    Eigen::MatrixXd Xi(180, 4);
    Xi.col(0).setOnes();
    Xi.rightCols(3) = X.topRows(180);
    Eigen::VectorXd ref = test::ols_solve(Xi, y.topRows(180));
    CHECK((Xi * ref - y.topRows(180)).squaredNorm() < 1e-18);
  }
  SUBCASE("fixed seed reproduces the loss trace") {
    auto cfg = small_config(3, {5});
    cfg.epochs = 8;
    cfg.dropout_p = 0.2;
    auto a = nn::sgd_train(nn::init_network(cfg), train, valid);
    auto b = nn::sgd_train(nn::init_network(cfg), train, valid);
    CHECK(a.train_trace == b.train_trace);
    CHECK(a.valid_trace == b.valid_trace);
  }
  SUBCASE("divergence raises a training error") {
    auto cfg = small_config(3, {4});
    cfg.learning_rate = 1e12;
    cfg.epochs = 10;
    CHECK_THROWS_AS(nn::sgd_train(nn::init_network(cfg), train, valid),
                    NumericError);
  }
  SUBCASE("dropout training bakes the inference scaling") {
    auto cfg = small_config(3, {4});
    cfg.epochs = 3;
    cfg.dropout_p = 0.25;
    auto trained = nn::sgd_train(nn::init_network(cfg), train, valid);
    CHECK(trained.dropout_scaled);
  }
  SUBCASE("final weight norm shrinks as the l2 penalty grows") {
    double prev = -1.0;
    for (double lambda : {0.0, 1e-3, 1e-1}) {
      auto cfg = small_config(3, {6});
      cfg.penalty_kind = nn::Penalty::L2;
      cfg.penalty_weight = lambda;
      cfg.epochs = 40;
      auto trained = nn::sgd_train(nn::init_network(cfg), train, valid);
      double norm = 0.0;
      for (const auto& w : trained.weights) norm += w.squaredNorm();
      if (prev >= 0.0) CHECK(norm <= prev + 1e-9);
      prev = norm;
    }
  }
}

TEST_CASE("dropout_ridge_penalty") {
  SUBCASE("p = 0 gives zero") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 3);
    Eigen::VectorXd w = Eigen::VectorXd::Random(3);
    CHECK(nn::dropout_ridge_penalty(X, w, 0.0) == 0.0);
  }
  SUBCASE("unit-norm columns reduce to p(1-p)||w||^2") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 2);
    X(0, 0) = 1.0;
    X(1, 1) = 1.0;  // each column has squared norm 1
    Eigen::VectorXd w(2);
    w << 2.0, -3.0;
    CHECK(nn::dropout_ridge_penalty(X, w, 0.3) ==
          doctest::Approx(0.3 * 0.7 * 13.0));
  }
  SUBCASE("Monte Carlo marginalization identity within 3 standard errors") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Rng rng(seed);
      const int T = 25, p = 4;
      Eigen::MatrixXd X(T, p);
      Eigen::VectorXd w(p), y(T);
      for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
      for (int j = 0; j < p; ++j) w[j] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < T; ++i) y[i] = rng.normal();
      const double keep = 0.3 + 0.1 * static_cast<double>(seed);
      const int n_masks = 100000;
      double sum = 0.0, sumsq = 0.0;
      for (int k = 0; k < n_masks; ++k) {
        Eigen::VectorXd masked = Eigen::VectorXd::Zero(p);
        for (int j = 0; j < p; ++j)
          if (rng.bernoulli(keep)) masked[j] = w[j];
        double obj = (y - X * masked).squaredNorm();
        sum += obj;
        sumsq += obj * obj;
      }
      const double mc_mean = sum / n_masks;
      const double mc_sd = std::sqrt((sumsq / n_masks - mc_mean * mc_mean) /
                                     static_cast<double>(n_masks));
      const double closed =
          (y - keep * (X * w)).squaredNorm() + nn::dropout_ridge_penalty(X, w, keep);
      CHECK(std::abs(mc_mean - closed) <= 3.0 * mc_sd);
    }
  }
}

TEST_CASE("predict") {
  Rng rng(71);
  auto cfg = small_config(4, {5});
  auto net = nn::init_network(cfg);
  Eigen::MatrixXd X(12, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();

  SUBCASE("identical rows give identical predictions") {
    Eigen::MatrixXd same = X;
    same.row(3) = same.row(0);
    auto out = nn::predict(net, same);
    CHECK(out(3, 0) == out(0, 0));
  }
  SUBCASE("zero network predicts its bias everywhere") {
    auto zero = net;
    for (auto& w : zero.weights) w.setZero();
    zero.biases.back()[0] = 4.5;
    auto out = nn::predict(zero, X);
    for (Eigen::Index r = 0; r < out.rows(); ++r) CHECK(out(r, 0) == 4.5);
  }
  SUBCASE("matches forward row by row within 1e-12") {
    auto out = nn::predict(net, X);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      auto f = nn::forward(net, X.row(r).transpose());
      CHECK(out(r, 0) == doctest::Approx(f.prediction[0]).epsilon(1e-12));
    }
  }
  SUBCASE("permuting hidden units leaves predictions unchanged") {
    auto permuted = net;
    // swap units 1 and 3 of the hidden layer
    permuted.weights[0].row(1).swap(permuted.weights[0].row(3));
    std::swap(permuted.biases[0][1], permuted.biases[0][3]);
    permuted.weights[1].col(1).swap(permuted.weights[1].col(3));
    auto a = nn::predict(net, X);
    auto b = nn::predict(permuted, X);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("deep net JSON round trip") {
  auto cfg = small_config(3, {4, 2});
  cfg.dropout_p = 0.1;
  auto net = nn::init_network(cfg);
  auto path = (std::filesystem::temp_directory_path() / "flowcast_dl_rt.json").string();
  nn::save_json(net, path);
  auto loaded = nn::load_json(path);
  REQUIRE(loaded.weights.size() == net.weights.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    CHECK((loaded.weights[l].array() == net.weights[l].array()).all());
    CHECK((loaded.biases[l].array() == net.biases[l].array()).all());
  }
  CHECK(loaded.config.dropout_p == cfg.dropout_p);
  std::filesystem::remove(path);
}
