#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salab/linalg.hpp"
#include "salab/rng.hpp"

namespace salab {

/// A contractive map T : R^d -> R^d together with the norm it contracts in,
/// its modulus, and (when known) its fixed point theta*.
class Operator {
 public:
  using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

  Operator(int dim, double gamma, Norm norm, ApplyFn fn,
           std::optional<Vec> fixed_point = std::nullopt,
           std::string name = "custom");

  int dim() const { return dim_; }
  double contraction_modulus() const { return gamma_; }
  Norm norm() const { return norm_; }
  const std::optional<Vec>& fixed_point() const { return fixed_point_; }
  const std::string& name() const { return name_; }

  void apply(std::span<const double> in, std::span<double> out) const;
  Vec operator()(const Vec& x) const;

 private:
  int dim_;
  double gamma_;
  Norm norm_;
  ApplyFn fn_;
  std::optional<Vec> fixed_point_;
  std::string name_;
};

/// T(theta) = A theta + b. Rejects ||A|| >= 1 in the declared norm
/// (spectral for L2, max row sum for LInf). theta* = (I - A)^{-1} b.
Operator linear_op(const Mat& A, const Vec& b, Norm norm = Norm::L2);

/// The 1-D nonsmooth example T(theta) = -|theta|/2 - b. gamma = 1/2,
/// theta* = -2b/3 for b <= 0 and -2b for b > 0.
Operator scaled_abs_op(double b);

/// Componentwise max over affine pieces, scaled into a contraction:
/// T(theta)_i = scale * max_j (A_j theta + b_j)_i, contracting in LInf with
/// gamma = scale * max_j ||A_j||_inf. The fixed point is computed at
/// construction by fixed-point iteration.
Operator max_affine_op(const std::vector<Mat>& mats,
                       const std::vector<Vec>& offsets, double scale);

/// Smooth 1-D contraction with curvature at its fixed point:
/// T(theta) = 0.4 theta + 0.2 tanh^2(theta), theta* = 0, gamma = 0.554.
/// Its constant-stepsize bias is O(alpha), unlike the nonsmooth examples.
Operator smooth_curved_op();

enum class NoiseKind { Gaussian, RademacherScaled };

/// Zero-mean i.i.d. noise with covariance Sigma. Gaussian draws d standard
/// normals through the Cholesky factor; the scaled-Rademacher variant draws
/// independent +-sqrt(Sigma_ii) per component (same mean and diagonal
/// covariance, different higher moments).
class NoiseSampler {
 public:
  static NoiseSampler gaussian(Mat sigma);
  static NoiseSampler gaussian_iso(int dim, double variance);
  static NoiseSampler rademacher(Mat sigma);
  static NoiseSampler rademacher_iso(int dim, double variance);

  void draw(RngStream& stream, std::span<double> out) const;
  int dim() const { return sigma_.rows; }
  NoiseKind kind() const { return kind_; }
  const Mat& covariance() const { return sigma_; }

 private:
  NoiseSampler(NoiseKind kind, Mat sigma);
  NoiseKind kind_;
  Mat sigma_;
  Mat chol_;       // Gaussian only
  Vec root_diag_;  // Rademacher only
};

}  // namespace salab
