#include "ppnp/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <sstream>
#include <vector>

namespace ppnp::io {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

void append_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void check_dimensions(std::uint64_t w, std::uint64_t h, const fs::path& path) {
  if (w < 1 || h < 1 || w > kMaxDimension || h > kMaxDimension)
    throw IoError("'" + path.string() + "': unsupported dimensions " + std::to_string(w) + "x" +
                  std::to_string(h));
}

// Reads one whitespace-delimited PGM header token, skipping comments.
std::string pgm_token(const std::vector<unsigned char>& bytes, std::size_t& pos, const fs::path& path) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok += char(bytes[pos++]);
  if (tok.empty()) throw IoError("'" + path.string() + "': malformed PGM header");
  return tok;
}

std::uint64_t parse_uint(const std::string& tok, const fs::path& path) {
  if (tok.empty() || tok.size() > 9 || !std::all_of(tok.begin(), tok.end(), ::isdigit))
    throw IoError("'" + path.string() + "': malformed header field '" + tok + "'");
  return std::stoull(tok);
}

Image<double> load_pgm(const std::vector<unsigned char>& bytes, Domain domain, const fs::path& path) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos, path) != "P5") throw IoError("'" + path.string() + "': not a P5 PGM");
  const auto w = parse_uint(pgm_token(bytes, pos, path), path);
  const auto h = parse_uint(pgm_token(bytes, pos, path), path);
  const auto maxval = parse_uint(pgm_token(bytes, pos, path), path);
  check_dimensions(w, h, path);
  if (maxval < 1 || maxval > 65535) throw IoError("'" + path.string() + "': bad PGM maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw IoError("'" + path.string() + "': malformed PGM header");
  ++pos;
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() - pos < w * h * bps) throw IoError("'" + path.string() + "': truncated PGM data");
  Grid<double> g(h, w);
  for (std::size_t i = 0; i < w * h; ++i) {
    const unsigned v = bps == 2 ? (unsigned(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1]
                                : bytes[pos + i];
    g.data()[i] = domain == Domain::SceneUnit ? double(v) / double(maxval) : double(v);
  }
  return Image<double>(std::move(g), domain);
}

Image<double> load_float_grid(const std::vector<unsigned char>& bytes, Domain domain,
                              const fs::path& path) {
  const std::uint64_t w = read_u32_le(bytes.data() + 8);
  const std::uint64_t h = read_u32_le(bytes.data() + 12);
  check_dimensions(w, h, path);
  if (bytes.size() != kFloatGridHeaderBytes + 4 * w * h)
    throw IoError("'" + path.string() + "': float grid size does not match header");
  Grid<double> g(h, w);
  for (std::size_t i = 0; i < w * h; ++i) {
    const std::uint32_t bits = read_u32_le(bytes.data() + kFloatGridHeaderBytes + 4 * i);
    g.data()[i] = double(std::bit_cast<float>(bits));
  }
  return Image<double>(std::move(g), domain);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

ImageFormat format_for_path(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".pgm" ? ImageFormat::Pgm8 : ImageFormat::FloatGrid;
}

Image<double> load_image(const fs::path& path, Domain domain) {
  const auto bytes = read_bytes(path);
  if (bytes.size() >= kFloatGridHeaderBytes &&
      std::memcmp(bytes.data(), kFloatGridMagic, sizeof(kFloatGridMagic)) == 0)
    return load_float_grid(bytes, domain, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pgm(bytes, domain, path);
  throw IoError("'" + path.string() + "': unrecognized image format");
}

void save_image(const fs::path& path, const Image<double>& img, ImageFormat format) {
  const auto& d = img.data();
  std::vector<unsigned char> out;
  if (format == ImageFormat::FloatGrid) {
    out.assign(std::begin(kFloatGridMagic), std::end(kFloatGridMagic));
    append_u32_le(out, static_cast<std::uint32_t>(img.width()));
    append_u32_le(out, static_cast<std::uint32_t>(img.height()));
    out.reserve(out.size() + 4 * d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      append_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(d.data()[i])));
    write_bytes(path, out);
    return;
  }
  const bool sixteen = format == ImageFormat::Pgm16;
  const unsigned maxval = sixteen ? 65535u : 255u;
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n" +
      std::to_string(maxval) + "\n";
  out.assign(header.begin(), header.end());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double scaled = img.domain() == Domain::SceneUnit ? d.data()[i] * maxval : d.data()[i];
    const auto q = static_cast<unsigned>(std::clamp(std::lround(scaled), 0L, long(maxval)));
    if (sixteen) out.push_back(static_cast<unsigned char>(q >> 8));
    out.push_back(static_cast<unsigned char>(q & 0xff));
  }
  write_bytes(path, out);
}

void save_image(const fs::path& path, const Image<double>& img) {
  save_image(path, img, format_for_path(path));
}

BlurKernel<double> parse_kernel_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw IoError("kernel: bad tap '" + tok + "'");
      }
      if (used != tok.size() || !std::isfinite(v)) throw IoError("kernel: bad tap '" + tok + "'");
      if (v < 0.0) throw IoError("kernel: taps must be nonnegative, got " + tok);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("kernel: no taps");
  const std::size_t n = rows.size();
  Grid<double> taps(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw IoError("kernel: expected a square grid of taps");
    for (std::size_t j = 0; j < n; ++j) taps(i, j) = rows[i][j];
  }
  if (n % 2 == 0) throw IoError("kernel: size must be odd, got " + std::to_string(n));
  try {
    return BlurKernel<double>::normalized(std::move(taps));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("kernel: ") + e.what());
  }
}

BlurKernel<double> load_kernel(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return parse_kernel_text(std::string(bytes.begin(), bytes.end()));
  } catch (const IoError& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void save_kernel(const fs::path& path, const BlurKernel<double>& kernel) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& t = kernel.taps();
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) os << (j ? " " : "") << t(i, j);
    os << "\n";
  }
  const std::string s = os.str();
  write_bytes(path, std::vector<unsigned char>(s.begin(), s.end()));
}

BlurKernel<double> kernel_from_spec(const std::string& spec) {
  const std::string prefix = "gauss:";
  if (spec.rfind(prefix, 0) != 0) return load_kernel(spec);
  std::vector<double> args;
  std::stringstream ss(spec.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      args.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad kernel spec '" + spec + "'");
    }
  }
  if (args.size() < 2 || args.size() > 4 || args[0] != std::floor(args[0]))
    throw std::invalid_argument("kernel spec must be gauss:size,sigma_x[,sigma_y[,theta]]");
  const double sx = args[1];
  const double sy = args.size() > 2 ? args[2] : sx;
  const double theta = args.size() > 3 ? args[3] : 0.0;
  return gaussian_kernel<double>(static_cast<Eigen::Index>(args[0]), sx, sy, theta);
}

std::string kernel_hash(const BlurKernel<double>& kernel) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(kernel.size()));
  const auto& t = kernel.taps();
  for (Eigen::Index i = 0; i < t.size(); ++i) feed(std::bit_cast<std::uint64_t>(t.data()[i]));
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

RawMetadata load_raw_metadata(const fs::path& path) {
  const auto bytes = read_bytes(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("'" + path.string() + "': expected key=value, got '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  RawMetadata meta;
  try {
    if (!kv.count("width") || !kv.count("height"))
      throw IoError("'" + path.string() + "': width and height are required");
    meta.width = std::stol(kv["width"]);
    meta.height = std::stol(kv["height"]);
    if (kv.count("black_level")) meta.black_level = std::stoi(kv["black_level"]);
    if (kv.count("gain")) meta.gain = std::stod(kv["gain"]);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception&) {
    throw IoError("'" + path.string() + "': malformed metadata value");
  }
  check_dimensions(static_cast<std::uint64_t>(std::max<Eigen::Index>(meta.width, 0)),
                   static_cast<std::uint64_t>(std::max<Eigen::Index>(meta.height, 0)), path);
  return meta;
}

RawFrame load_raw(const fs::path& data_path, const RawMetadata& meta) {
  const auto bytes = read_bytes(data_path);
  const auto n = static_cast<std::size_t>(meta.width * meta.height);
  if (bytes.size() != 2 * n)
    throw IoError("'" + data_path.string() + "': expected " + std::to_string(2 * n) + " bytes, got " +
                  std::to_string(bytes.size()));
  RawFrame f;
  f.width = meta.width;
  f.height = meta.height;
  f.black_level = meta.black_level;
  f.gain = meta.gain;
  f.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.values[i] = bytes[2 * i] | (bytes[2 * i + 1] << 8);
  return f;
}

void save_raw(const fs::path& data_path, const fs::path& meta_path, const RawFrame& frame) {
  std::vector<unsigned char> out;
  out.reserve(2 * frame.values.size());
  for (auto v : frame.values) {
    const auto u = static_cast<std::uint16_t>(std::clamp(v, 0, 65535));
    out.push_back(static_cast<unsigned char>(u & 0xff));
    out.push_back(static_cast<unsigned char>(u >> 8));
  }
  write_bytes(data_path, out);
  std::ostringstream os;
  os << std::setprecision(17) << "width=" << frame.width << "\nheight=" << frame.height
     << "\nblack_level=" << frame.black_level << "\ngain=" << frame.gain << "\n";
  const std::string s = os.str();
  write_bytes(meta_path, std::vector<unsigned char>(s.begin(), s.end()));
}

}  // namespace ppnp::io
