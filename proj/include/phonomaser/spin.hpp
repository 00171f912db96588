#pragma once

#include <cmath>
#include <complex>

#include "phonomaser/errors.hpp"
#include "phonomaser/numerics.hpp"

namespace phonomaser {

/// Normalized two-component spin amplitude over {|up>, |down>}. Unnormalized
/// input is accepted and normalized; the applied scale is recorded.
class SpinVector {
  public:
    SpinVector(Complex up, Complex down) : up_(up), down_(down) {
        const double norm = std::sqrt(std::norm(up_) + std::norm(down_));
        if (norm < 1e-300) throw InvalidParameter("SpinVector: zero vector");
        scale_ = 1.0 / norm;
        up_ *= scale_;
        down_ *= scale_;
    }

    static SpinVector up() { return {1.0, 0.0}; }
    static SpinVector down() { return {0.0, 1.0}; }
    static SpinVector plus() { return {1.0, 1.0}; }
    /// cos(theta)|up> + sin(theta)|down>
    static SpinVector target_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

    Complex up_amplitude() const { return up_; }
    Complex down_amplitude() const { return down_; }
    /// Scale that was applied to normalize the constructor input.
    double normalization_scale() const { return scale_; }

    /// State orthogonal to this one (unique up to phase).
    SpinVector orthogonal() const { return {-std::conj(down_), std::conj(up_)}; }

    Complex overlap(const SpinVector& other) const {  // <this|other>
        return std::conj(up_) * other.up_ + std::conj(down_) * other.down_;
    }

    bool is_sigma_z_eigenstate(double tol = 1e-14) const {
        return std::norm(up_) < tol || std::norm(down_) < tol;
    }

  private:
    Complex up_, down_;
    double scale_;
};

/// Success probability of post-selecting `post` after preparing `pre`:
/// |<post|pre>|^2.
inline double spin_overlap_probability(const SpinVector& pre, const SpinVector& post) {
    return std::norm(post.overlap(pre));
}

}  // namespace phonomaser
