#include "salab/operators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace salab {

Operator::Operator(int dim, double gamma, Norm norm, ApplyFn fn,
                   std::optional<Vec> fixed_point, std::string name)
    : dim_(dim),
      gamma_(gamma),
      norm_(norm),
      fn_(std::move(fn)),
      fixed_point_(std::move(fixed_point)),
      name_(std::move(name)) {
  if (dim_ <= 0) throw std::invalid_argument("Operator: dim must be positive");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw std::invalid_argument("Operator: contraction modulus must be in (0,1)");
  }
  if (fixed_point_ && int(fixed_point_->size()) != dim_) {
    throw std::invalid_argument("Operator: fixed point dimension mismatch");
  }
}

void Operator::apply(std::span<const double> in, std::span<double> out) const {
  if (int(in.size()) != dim_ || int(out.size()) != dim_) {
    throw std::invalid_argument("Operator::apply: dimension mismatch");
  }
  fn_(in, out);
}

Vec Operator::operator()(const Vec& x) const {
  Vec out(dim_);
  apply(x, out);
  return out;
}

Operator linear_op(const Mat& A, const Vec& b, Norm norm) {
  const int d = A.rows;
  if (A.cols != d || int(b.size()) != d) {
    throw std::invalid_argument("linear_op: shape mismatch");
  }
  const double g = (norm == Norm::L2) ? spectral_norm(A) : inf_operator_norm(A);
  if (g >= 1.0) {
    throw std::invalid_argument("linear_op: ||A|| >= 1, not a contraction");
  }
  // theta* solves (I - A) theta = b.
  Mat ima(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) ima(i, j) = (i == j ? 1.0 : 0.0) - A(i, j);
  }
  Vec star = solve_linear(ima, b);
  Mat a_copy = A;
  Vec b_copy = b;
  auto fn = [a_copy, b_copy](std::span<const double> in, std::span<double> out) {
    mat_vec(a_copy, in, out);
    for (size_t i = 0; i < out.size(); ++i) out[i] += b_copy[i];
  };
  // A singular A gives g = 0; clamp the declared modulus into (0,1).
  const double gamma = std::max(g, 1e-12);
  return Operator(d, gamma, norm, std::move(fn), std::move(star), "linear");
}

Operator scaled_abs_op(double b) {
  const double star = (b <= 0.0) ? -2.0 * b / 3.0 : -2.0 * b;
  auto fn = [b](std::span<const double> in, std::span<double> out) {
    out[0] = -0.5 * std::abs(in[0]) - b;
  };
  return Operator(1, 0.5, Norm::L2, std::move(fn), Vec{star}, "scaled-abs");
}

Operator max_affine_op(const std::vector<Mat>& mats,
                       const std::vector<Vec>& offsets, double scale) {
  if (mats.empty() || mats.size() != offsets.size()) {
    throw std::invalid_argument("max_affine_op: need matching pieces");
  }
  const int d = mats[0].rows;
  double worst = 0.0;
  for (size_t j = 0; j < mats.size(); ++j) {
    if (mats[j].rows != d || mats[j].cols != d || int(offsets[j].size()) != d) {
      throw std::invalid_argument("max_affine_op: piece shape mismatch");
    }
    worst = std::max(worst, inf_operator_norm(mats[j]));
  }
  const double gamma = scale * worst;
  if (!(scale > 0.0) || gamma >= 1.0) {
    throw std::invalid_argument(
        "max_affine_op: scale * max ||A_j||_inf must be in (0,1)");
  }
  auto pieces = mats;
  auto offs = offsets;
  auto fn = [pieces, offs, scale, d](std::span<const double> in,
                                     std::span<double> out) {
    Vec tmp(d);
    for (int i = 0; i < d; ++i) out[i] = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < pieces.size(); ++j) {
      mat_vec(pieces[j], in, tmp);
      for (int i = 0; i < d; ++i) {
        out[i] = std::max(out[i], tmp[i] + offs[j][i]);
      }
    }
    for (int i = 0; i < d; ++i) out[i] *= scale;
  };
  // Contraction, so the fixed point is reachable by plain iteration.
  Vec star(d, 0.0), next(d);
  for (int it = 0; it < 200000; ++it) {
    fn(star, next);
    double diff = dist_of(Norm::LInf, star, next);
    star = next;
    if (diff <= 1e-15 * (1.0 + linf_norm(star))) break;
  }
  return Operator(d, std::max(gamma, 1e-12), Norm::LInf, std::move(fn),
                  std::move(star), "max-affine");
}

Operator smooth_curved_op() {
  auto fn = [](std::span<const double> in, std::span<double> out) {
    const double t = std::tanh(in[0]);
    out[0] = 0.4 * in[0] + 0.2 * t * t;
  };
  // sup |T'| = 0.4 + 0.4 * max |tanh sech^2| = 0.4 + 0.4/(3 sqrt 3) < 0.554.
  return Operator(1, 0.554, Norm::L2, std::move(fn), Vec{0.0}, "smooth-curved");
}

NoiseSampler::NoiseSampler(NoiseKind kind, Mat sigma)
    : kind_(kind), sigma_(std::move(sigma)) {
  if (sigma_.rows != sigma_.cols || sigma_.rows <= 0) {
    throw std::invalid_argument("NoiseSampler: covariance must be square");
  }
  if (kind_ == NoiseKind::Gaussian) {
    chol_ = cholesky_psd(sigma_);
  } else {
    root_diag_.resize(sigma_.rows);
    for (int i = 0; i < sigma_.rows; ++i) {
      if (sigma_(i, i) < 0.0) {
        throw std::invalid_argument("NoiseSampler: negative variance");
      }
      root_diag_[i] = std::sqrt(sigma_(i, i));
    }
  }
}

NoiseSampler NoiseSampler::gaussian(Mat sigma) {
  return NoiseSampler(NoiseKind::Gaussian, std::move(sigma));
}

NoiseSampler NoiseSampler::gaussian_iso(int dim, double variance) {
  Mat s(dim, dim);
  for (int i = 0; i < dim; ++i) s(i, i) = variance;
  return gaussian(std::move(s));
}

NoiseSampler NoiseSampler::rademacher(Mat sigma) {
  return NoiseSampler(NoiseKind::RademacherScaled, std::move(sigma));
}

NoiseSampler NoiseSampler::rademacher_iso(int dim, double variance) {
  Mat s(dim, dim);
  for (int i = 0; i < dim; ++i) s(i, i) = variance;
  return rademacher(std::move(s));
}

void NoiseSampler::draw(RngStream& stream, std::span<double> out) const {
  const int d = sigma_.rows;
  if (int(out.size()) != d) {
    throw std::invalid_argument("NoiseSampler::draw: dimension mismatch");
  }
  if (kind_ == NoiseKind::Gaussian) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z[i] = stream.standard_normal();
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) s += chol_(i, j) * z[j];
      out[i] = s;
    }
  } else {
    for (int i = 0; i < d; ++i) {
      out[i] = (stream.uniform01() < 0.5 ? -1.0 : 1.0) * root_diag_[i];
    }
  }
}

}  // namespace salab
