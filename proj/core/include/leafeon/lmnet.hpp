#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "leafeon/features.hpp"

namespace leafeon::lmnet {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

enum class Variant { RssOnly, RssPlusAng, Full };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct Dims {
  std::size_t iota = 11;
  std::size_t kappa = 4;

  std::size_t rss_width() const { return kappa * features::kZoneBins; }
  bool operator==(const Dims&) const = default;
};

/// Layer widths of the two extractors and the fusion heads.
inline constexpr std::size_t kLocationWidths[] = {features::kLocationWidth, 16, 64, 128, 256, 256};
inline constexpr std::size_t kRssHidden[] = {64, 128, 256, 256};
inline constexpr std::size_t kGateHidden = 32;
inline constexpr std::size_t kFeatureWidth = 256;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Forces a fusion weight to a constant instead of its head output.
struct GateOverride {
  std::optional<double> location;
  std::optional<double> rss;
};

enum class Mode { Train, Eval };

/// One mini-batch, one row per (sample, steering angle): row b * iota + i.
struct Batch {
  std::size_t size = 0;
  Mat location;  // (size * iota) x 5
  Mat rss;       // (size * iota) x (kappa * 3)
};

Batch make_batch(std::span<const features::FeatureSample> samples,
                 std::span<const std::size_t> indices, const Dims& dims);

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct Gradient {
  double loss = 0.0;
  Vec grad;
  double dead_gate_fraction = 0.0;  // rows with both fusion weights at zero
};

/// LM-Net: a location extractor and an RSS extractor (affine, batch norm,
/// ReLU per layer), per-angle scalar fusion weights, and a linear head on the
/// flattened fused features. Parameters live in one flat vector.
class LmNet {
 public:
  LmNet(const Dims& dims, Variant variant, std::uint64_t seed);

  const Dims& dims() const { return dims_; }
  Variant variant() const { return variant_; }

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  /// Batch-norm running means and variances.
  Vec& buffers() { return buffers_; }
  const Vec& buffers() const { return buffers_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  void set_gate_override(const GateOverride& g) { override_ = g; }
  const GateOverride& gate_override() const { return override_; }
  void set_regression_bias(double b);

  /// Predictions, one per sample. Train mode normalises with batch statistics
  /// and, when update_running_stats is set, advances the running averages.
  Vec forward(const Batch& batch, Mode mode, bool update_running_stats = false);

  /// Sets every running mean and variance to the statistics of `batch`
  /// (one train-mode pass with momentum 1).
  void refresh_batch_norm(const Batch& batch);

  /// MSE loss and its gradient with respect to every parameter (train mode).
  Gradient loss_and_gradient(const Batch& batch, std::span<const double> targets,
                             bool update_running_stats = true);

  /// When enabled, every forward pass hashes the sign pattern of all ReLU
  /// inputs. Two passes with equal signatures took the same linear piece.
  void track_activation_pattern(bool on) { track_pattern_ = on; }
  std::uint64_t activation_signature() const { return signature_; }

  /// Fusion weights of the last forward pass, one per row.
  const Vec& last_location_weight() const { return last_omega_a_; }
  const Vec& last_rss_weight() const { return last_omega_r_; }

  struct Dense {
    std::size_t in = 0, out = 0;
    std::size_t w = 0, b = 0;
    bool norm = false;
    std::size_t gamma = 0, beta = 0;
    std::size_t mean = 0, var = 0;  // into buffers_
  };

 private:
  struct LayerCache {
    Mat input;
    Mat xhat;
    Eigen::RowVectorXd inv_std;
    Mat pre;  // value fed to the ReLU
    Mat out;
  };
  struct Cache {
    std::vector<LayerCache> location, rss, gate_a, gate_r;
    Mat fa, fr, fm;
    Vec omega_a, omega_r;
  };

  Vec run(const Batch& batch, Mode mode, bool update_stats, Cache* cache);
  Mat run_stack(const std::vector<Dense>& stack, const Mat& x, Mode mode, bool update_stats,
                std::vector<LayerCache>* cache);
  Mat back_stack(const std::vector<Dense>& stack, const std::vector<LayerCache>& cache, Mat grad,
                 Vec& out);
  Vec gate(const std::vector<Dense>& head, const Mat& f, std::vector<LayerCache>* cache);

  std::size_t add_group(const std::string& name, std::size_t size);
  Dense add_dense(const std::string& name, std::size_t in, std::size_t out, bool norm);

  Dims dims_;
  Variant variant_;
  std::vector<Dense> location_, rss_, gate_a_, gate_r_;
  std::size_t reg_w_ = 0, reg_b_ = 0;
  std::vector<ParamGroup> groups_;
  std::size_t n_params_ = 0, n_buffers_ = 0;
  Vec params_, buffers_;
  GateOverride override_;
  Vec last_omega_a_, last_omega_r_;
  double momentum_ = kBatchNormMomentum;
  bool track_pattern_ = false;
  std::uint64_t signature_ = 0;
};

/// Train-mode batch normalisation before gamma and beta: subtracts the column
/// means and divides by sqrt(biased variance + eps).
Mat normalize_batch(const Mat& z, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& var,
                    Eigen::RowVectorXd& inv_std);

/// F_m = omega_a F_a + omega_r F_r with one weight per row.
Mat fuse(const Mat& fa, const Mat& fr, const Vec& omega_a, const Vec& omega_r);

/// Mean of (pred - target)^2. Lengths must match.
double mse(std::span<const double> pred, std::span<const double> target);

}  // namespace leafeon::lmnet
