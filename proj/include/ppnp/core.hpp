#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppnp {

/// Dense row-major 2-D grid. Rows index the vertical axis (height), columns the
/// horizontal axis (width).
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ComplexGrid = Grid<std::complex<Scalar>>;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numeric procedure cannot produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { SceneUnit, PhotonCount };

inline const char* to_string(Domain d) {
  return d == Domain::SceneUnit ? "scene" : "photons";
}

inline constexpr double kSceneUnitSlack = 1e-6;

template <typename A, typename B>
void require_same_shape(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

template <typename Derived>
void require_finite(const Eigen::ArrayBase<Derived>& a, const char* what) {
  if (!a.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

/// Expected photons per unit scene intensity. Always strictly positive.
class PhotonLevel {
 public:
  explicit PhotonLevel(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("photon level must be finite and > 0, got " +
                                  std::to_string(alpha));
  }
  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// A grayscale image with a domain tag. The tag is checked where images enter
/// the public API; solver internals work on bare grids.
template <typename Scalar>
class Image {
 public:
  Image() = default;
  Image(Grid<Scalar> data, Domain domain) : data_(std::move(data)), domain_(domain) {
    if (data_.rows() < 1 || data_.cols() < 1) throw std::invalid_argument("image must be non-empty");
  }
  Image(Eigen::Index height, Eigen::Index width, Domain domain, Scalar fill = Scalar(0))
      : Image(Grid<Scalar>::Constant(height, width, fill), domain) {}

  Eigen::Index width() const { return data_.cols(); }
  Eigen::Index height() const { return data_.rows(); }
  Eigen::Index size() const { return data_.size(); }
  Domain domain() const { return domain_; }

  const Grid<Scalar>& data() const { return data_; }
  Grid<Scalar>& data() { return data_; }

  Scalar operator()(Eigen::Index row, Eigen::Index col) const { return data_(row, col); }
  Scalar& operator()(Eigen::Index row, Eigen::Index col) { return data_(row, col); }

 private:
  Grid<Scalar> data_;
  Domain domain_ = Domain::SceneUnit;
};

struct Violation {
  std::string kind;  // "finite", "range", "shape"
  std::string message;
};

/// Reports every invariant violation of an image without modifying it.
template <typename Scalar>
std::vector<Violation> validate(const Image<Scalar>& img) {
  std::vector<Violation> out;
  const auto& d = img.data();
  if (d.rows() < 1 || d.cols() < 1) {
    out.push_back({"shape", "image has zero extent"});
    return out;
  }
  Eigen::Index nonfinite = 0, below = 0, above = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = static_cast<double>(d.data()[i]);
    if (!std::isfinite(v)) {
      ++nonfinite;
      continue;
    }
    if (v < 0.0) ++below;
    if (img.domain() == Domain::SceneUnit && v > 1.0 + kSceneUnitSlack) ++above;
  }
  if (nonfinite > 0)
    out.push_back({"finite", std::to_string(nonfinite) + " non-finite value(s)"});
  if (below > 0) out.push_back({"range", std::to_string(below) + " negative value(s)"});
  if (above > 0) out.push_back({"range", std::to_string(above) + " value(s) above 1"});
  return out;
}

template <typename Scalar>
void require_valid(const Image<Scalar>& img, Domain expected, const char* what) {
  if (img.domain() != expected)
    throw std::invalid_argument(std::string(what) + ": expected " + to_string(expected) +
                                " image, got " + to_string(img.domain()));
  auto v = validate(img);
  if (!v.empty()) throw std::invalid_argument(std::string(what) + ": " + v.front().message);
}

template <typename Derived>
Grid<typename Derived::Scalar> clamp_unit(const Eigen::ArrayBase<Derived>& a) {
  using S = typename Derived::Scalar;
  return a.max(S(0)).min(S(1));
}

template <typename A, typename B>
typename A::Scalar inner(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  return (a * b).sum();
}

template <typename Derived>
typename Derived::Scalar norm2(const Eigen::ArrayBase<Derived>& a) {
  return std::sqrt(a.square().sum());
}

}  // namespace ppnp
