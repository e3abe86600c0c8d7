#include "ppnp/denoisers.hpp"

#include <sstream>

namespace ppnp {

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& full) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad denoiser parameter in '" + full + "'");
    }
    if (used != item.size()) throw std::invalid_argument("bad denoiser parameter in '" + full + "'");
  }
  return out;
}

}  // namespace

DenoiserSpec parse_denoiser(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::vector<double> args =
      colon == std::string::npos ? std::vector<double>{} : parse_numbers(text.substr(colon + 1), text);
  DenoiserSpec spec;
  if (name == "identity" && args.empty()) {
    spec = DenoiserSpec::identity();
  } else if ((name == "gauss" || name == "gaussian") && args.size() == 1) {
    spec = DenoiserSpec::gaussian(args[0]);
  } else if (name == "tv" && (args.size() == 1 || args.size() == 2)) {
    spec = DenoiserSpec::total_variation(args[0], args.size() == 2 ? int(args[1]) : 50);
  } else if (name == "median" && args.size() == 1) {
    spec = DenoiserSpec::median(int(args[0]));
  } else {
    throw std::invalid_argument("unknown denoiser '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::string describe(const DenoiserSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case DenoiserKind::Identity:
      os << "identity";
      break;
    case DenoiserKind::GaussianSmooth:
      os << "gauss:" << spec.sigma;
      break;
    case DenoiserKind::TotalVariation:
      os << "tv:" << spec.weight << "," << spec.iterations;
      break;
    case DenoiserKind::Median:
      os << "median:" << spec.radius;
      break;
  }
  return os.str();
}

}  // namespace ppnp
