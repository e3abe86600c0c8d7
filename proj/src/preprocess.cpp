#include "ppnp/preprocess.hpp"

namespace ppnp {

Image<double> raw_to_photons(const RawFrame& raw) {
  if (!(raw.gain > 0.0)) throw std::invalid_argument("raw_to_photons: gain must be > 0");
  if (raw.width < 1 || raw.height < 1 ||
      raw.values.size() != static_cast<std::size_t>(raw.width * raw.height))
    throw DimensionMismatch("raw_to_photons: sample count does not match width x height");
  Grid<double> y(raw.height, raw.width);
  for (std::size_t i = 0; i < raw.values.size(); ++i)
    y.data()[i] = std::max(0.0, double(raw.values[i] - raw.black_level) / raw.gain);
  return Image<double>(std::move(y), Domain::PhotonCount);
}

PhotonLevel estimate_alpha(const Image<double>& y, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("estimate_alpha: beta must be in (0, 1)");
  if (y.size() == 0) throw std::invalid_argument("estimate_alpha: empty image");
  const double a = y.data().mean() / beta;
  if (!(a > 0.0)) throw std::invalid_argument("estimate_alpha: image has no photons");
  return PhotonLevel(a);
}

ColorPlanes gray_world(const ColorPlanes& in) {
  ColorPlanes out = in;
  for (std::size_t c = 0; c < in.planes.size(); ++c) {
    require_same_shape(in.planes[c].data(), in.planes[0].data(), "gray_world");
    const double m = in.planes[c].data().mean();
    if (!(m > 0.0))
      throw std::invalid_argument(std::string("gray_world: plane ") + ColorPlanes::kNames[c] +
                                  " has non-positive mean");
    out.planes[c].data() /= m;
  }
  return out;
}

}  // namespace ppnp
