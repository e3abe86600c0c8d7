// Command-line front end: simulate, deblur, benchmark, gradcheck, raw-convert.
//
// Exit codes: 0 success, 1 numerical failure (including a failed gradient
// check), 2 I/O or argument error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ppnp/io.hpp"
#include "ppnp/ppnp.hpp"
#include "ppnp/random.hpp"
#include "ppnp/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ppnp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

fs::path sidecar_path(const fs::path& out) { return fs::path(out.string() + ".json"); }

// Photon counts can exceed 255, so PGM output of counts is always 16-bit.
void save_counts(const fs::path& path, const Image<double>& y) {
  io::save_image(path, y, io::format_for_path(path) == io::ImageFormat::Pgm8 ? io::ImageFormat::Pgm16
                                                                             : io::ImageFormat::FloatGrid);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_reals(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad value '" + item + "' in " + what);
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string input, kernel, out;
  double alpha = 0;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  const auto x = io::load_image(a.input, Domain::SceneUnit);
  require_valid(x, Domain::SceneUnit, "simulate input");
  const auto h = io::kernel_from_spec(a.kernel);
  const auto y = poisson_forward(x, h, PhotonLevel(a.alpha), a.seed);
  save_counts(a.out, y);

  json j;
  j["command"] = "simulate";
  j["input"] = a.input;
  j["alpha"] = a.alpha;
  j["kernel"] = a.kernel;
  j["kernel_hash"] = io::kernel_hash(h);
  j["seed"] = a.seed;
  j["width"] = y.width();
  j["height"] = y.height();
  j["mean_counts"] = y.data().mean();
  write_json(sidecar_path(a.out), j);
  std::cerr << "simulate: wrote " << a.out << " (" << y.width() << "x" << y.height()
            << ", mean " << y.data().mean() << " photons)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- deblur

struct DeblurArgs {
  std::string method = "pnp3", input, kernel, out;
  std::string denoiser = "tv:0.01";
  std::string rho = "auto";
  std::string pad = "none";
  double alpha = 0;
  int iters = -1;
  double delta_tol = 1e-2;
  bool fixed_rho = false;
};

struct DeblurResult {
  Image<double> image;
  RunReport<double> report;
  double rho0 = 0;
};

DeblurResult deblur_image(const Image<double>& y_in, const BlurKernel<double>& h, double alpha,
                          const DeblurArgs& a) {
  const bool pad = a.pad == "reflect";
  const Image<double> y = pad ? reflect_pad(y_in) : y_in;
  const PhotonLevel level(alpha);

  SolverConfig cfg = SolverConfig::for_alpha(level);
  if (a.rho != "auto") {
    const auto r = parse_reals(a.rho, "--rho");
    if (r.size() != 1) throw UsageError("--rho takes one value or 'auto'");
    cfg.rho1_init = cfg.rho2_init = r[0];
  }
  cfg.adaptive = !a.fixed_rho;
  cfg.delta_tol = a.delta_tol;
  cfg.denoiser = parse_denoiser(a.denoiser);
  if (a.iters >= 0) cfg.max_iters = a.iters;
  cfg.validate();

  DeblurResult out{Image<double>(1, 1, Domain::SceneUnit, 0.0), {}, cfg.rho1_init};
  if (a.method == "pnp3") {
    out.report = pnp3_run(y, h, cfg);
  } else if (a.method == "pnp2") {
    out.report = pnp2_run(y, h, cfg);
  } else if (a.method == "rl") {
    out.report = richardson_lucy(y, h, level, a.iters >= 0 ? a.iters : 50);
    out.rho0 = 0;
  } else if (a.method == "wiener") {
    out.report.final = wiener_init(y, h, level);
    out.report.last_iterate = out.report.final.data();
    out.rho0 = 0;
  } else {
    throw UsageError("unknown method '" + a.method + "'");
  }
  for (const auto& d : out.report.data_term_history)
    if (!std::isfinite(d)) throw NumericalError("non-finite data term during " + a.method);
  out.image = pad ? center_crop(out.report.final, y_in.width(), y_in.height()) : out.report.final;
  if (!validate(out.image).empty()) throw NumericalError(a.method + " produced an invalid image");
  return out;
}

int run_deblur(const DeblurArgs& a) {
  const auto y = io::load_image(a.input, Domain::PhotonCount);
  require_valid(y, Domain::PhotonCount, "deblur input");
  const auto h = io::kernel_from_spec(a.kernel);
  const auto start = std::chrono::steady_clock::now();
  const auto result = deblur_image(y, h, a.alpha, a);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::save_image(a.out, result.image);

  const bool iterative = a.method == "pnp3" || a.method == "pnp2";
  if (iterative)
    std::cerr << "deblur: " << a.method << " alpha=" << a.alpha << " rho0=" << result.rho0
              << (a.rho == "auto" ? " (auto)" : "") << "\n";
  std::cerr << "deblur: " << result.report.iters_run << " iterations";
  if (iterative) std::cerr << ", stopped by " << to_string(result.report.terminated_by);
  std::cerr << ", " << seconds << " s\n";

  const auto& r = result.report;
  json j;
  j["command"] = "deblur";
  j["method"] = a.method;
  j["input"] = a.input;
  j["kernel"] = a.kernel;
  j["kernel_hash"] = io::kernel_hash(h);
  j["alpha"] = a.alpha;
  j["denoiser"] = iterative ? describe(parse_denoiser(a.denoiser)) : "";
  j["pad"] = a.pad;
  j["rho_init"] = result.rho0;
  j["rho_mode"] = a.rho == "auto" ? "auto" : "fixed";
  j["adaptive"] = iterative && !a.fixed_rho;
  j["iters"] = r.iters_run;
  j["terminated_by"] = iterative ? to_string(r.terminated_by) : "";
  j["delta_history"] = r.delta_history;
  j["data_term_history"] = r.data_term_history;
  j["rho_history"] = r.rho_history;
  j["inner_failures"] = r.inner_failures;
  j["wall_time_s"] = seconds;
  write_json(sidecar_path(a.out), j);
  return kExitOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string corpus, kernels, out;
  std::string alphas = "5,10,20,40";
  std::string methods = "pnp3,rl,wiener";
  std::string denoiser = "tv:0.01";
  int iters = -1;
  std::uint64_t seed = 0;
};

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() != ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

int run_benchmark(const BenchmarkArgs& a) {
  const auto images = sorted_files(a.corpus);
  // A directory of kernel files, or ';'-separated inline specs.
  std::vector<std::pair<std::string, BlurKernel<double>>> kernels;
  if (fs::is_directory(a.kernels)) {
    for (const auto& p : sorted_files(a.kernels)) kernels.emplace_back(p.filename().string(), io::load_kernel(p));
  } else {
    for (const auto& spec : split(a.kernels, ';')) kernels.emplace_back(spec, io::kernel_from_spec(spec));
  }
  const auto alphas = parse_reals(a.alphas, "--alphas");
  const auto methods = split(a.methods, ',');
  for (const auto& m : methods)
    if (m != "pnp3" && m != "pnp2" && m != "rl" && m != "wiener") throw UsageError("unknown method '" + m + "'");

  std::ofstream csv(a.out, std::ios::trunc);
  if (!csv) throw IoError("cannot write '" + a.out + "'");
  csv << "image,kernel,alpha,method,psnr,ssim,iters,seconds\n";
  csv << std::setprecision(10);

  struct Cell {
    double psnr = 0, ssim = 0, iters = 0, seconds = 0;
    int n = 0;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Cell> cells;

  DeblurArgs d;
  d.denoiser = a.denoiser;
  d.iters = a.iters;
  for (std::size_t ii = 0; ii < images.size(); ++ii) {
    const auto truth = io::load_image(images[ii], Domain::SceneUnit);
    require_valid(truth, Domain::SceneUnit, "benchmark image");
    for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
      for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        // Every method sees the same measurement for a given cell.
        const std::uint64_t cell_seed = mix64(a.seed ^ mix64(ii * 1000003ULL + ki * 1009ULL + ai));
        const auto y = poisson_forward(truth, kernels[ki].second, PhotonLevel(alphas[ai]), cell_seed);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          d.method = methods[mi];
          const auto start = std::chrono::steady_clock::now();
          const auto r = deblur_image(y, kernels[ki].second, alphas[ai], d);
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          const double p = psnr(r.image, truth), s = ssim(r.image, truth);
          csv << csv_field(images[ii].filename().string()) << ',' << csv_field(kernels[ki].first) << ',' << alphas[ai] << ','
              << methods[mi] << ',' << p << ',' << s << ',' << r.report.iters_run << ',' << secs << '\n';
          auto& c = cells[{ki, ai, mi}];
          c.psnr += p;
          c.ssim += s;
          c.iters += r.report.iters_run;
          c.seconds += secs;
          ++c.n;
        }
      }
    }
  }

  std::ofstream means(a.out + ".means.csv", std::ios::trunc);
  if (!means) throw IoError("cannot write '" + a.out + ".means.csv'");
  means << "kernel,alpha,method,images,psnr,ssim,iters,seconds\n" << std::setprecision(10);
  for (const auto& [key, c] : cells) {
    const auto [ki, ai, mi] = key;
    means << csv_field(kernels[ki].first) << ',' << alphas[ai] << ',' << methods[mi] << ',' << c.n << ',' << c.psnr / c.n
          << ',' << c.ssim / c.n << ',' << c.iters / c.n << ',' << c.seconds / c.n << '\n';
  }
  json j;
  j["command"] = "benchmark";
  j["corpus"] = json::array();
  for (const auto& f : images) j["corpus"].push_back(f.filename().string());
  j["kernels"] = json::array();
  for (const auto& [name, h] : kernels) j["kernels"].push_back({{"name", name}, {"hash", io::kernel_hash(h)}});
  j["alphas"] = alphas;
  j["methods"] = methods;
  j["denoiser"] = describe(parse_denoiser(a.denoiser));
  j["iters"] = a.iters;
  j["seed"] = a.seed;
  write_json(sidecar_path(a.out), j);
  std::cerr << "benchmark: " << images.size() * kernels.size() * alphas.size() * methods.size() << " rows\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 0;
  int k = 8;
  int size = 16;
  double alpha = 20.0, rho = 2.0, sigma = 0.7;
  bool corrupt = false;
};

int run_gradcheck(const GradcheckArgs& a) {
  if (a.k < 0) throw UsageError("--k must be >= 0");
  if (a.size < 12 || a.size % 4 != 0) throw UsageError("--size must be a multiple of 4 and at least 12");
  const auto truth = synthetic_scene(a.size, a.size, a.seed);
  const auto h = gaussian_kernel(5, 1.0, 1.0);
  const auto y = poisson_forward(truth, h, PhotonLevel(a.alpha), a.seed);
  const auto report = grad_check(y, h, PhotonLevel(a.alpha), UnrolledParams::constant(a.k, a.rho, a.sigma),
                                 truth.data(), BackwardOptions{a.corrupt});
  std::cout << std::left << std::setw(12) << "param" << std::setw(16) << "analytic" << std::setw(16) << "numeric"
            << "rel_err\n";
  for (const auto& e : report.entries)
    std::cout << std::setw(12) << e.name << std::setw(16) << e.analytic << std::setw(16) << e.numeric << e.rel_err
              << '\n';
  std::cout << "max_rel_err " << report.max_rel_err << " tolerance " << kGradCheckTolerance << ' '
            << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------- raw-convert

struct RawConvertArgs {
  std::string raw, meta, out;
  bool estimate = false;
  double beta = kDefaultAlphaBeta;
};

int run_raw_convert(const RawConvertArgs& a) {
  const auto meta = io::load_raw_metadata(a.meta);
  const auto frame = io::load_raw(a.raw, meta);
  if (const auto n = frame.out_of_range_count())
    std::cerr << "raw-convert: warning: " << n << " samples outside the 14-bit range\n";
  const auto y = raw_to_photons(frame);
  save_counts(a.out, y);

  json j;
  j["command"] = "raw-convert";
  j["raw"] = a.raw;
  j["black_level"] = frame.black_level;
  j["gain"] = frame.gain;
  j["width"] = y.width();
  j["height"] = y.height();
  j["out_of_range"] = frame.out_of_range_count();
  if (a.estimate) {
    const double alpha = estimate_alpha(y, a.beta).value();
    j["beta"] = a.beta;
    j["alpha"] = alpha;
    // Ten significant digits hides division round-off; the sidecar keeps the full value.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", alpha);
    std::cout << "alpha " << json(std::stod(buf)).dump() << '\n';
  }
  write_json(sidecar_path(a.out), j);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson deblurring with plug-and-play operator splitting"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Blur a scene and draw Poisson photon counts");
  simulate->add_option("--input", sim.input, "Scene image in [0, 1] (PGM or float grid)")->required();
  simulate->add_option("--kernel", sim.kernel, "Kernel file or gauss:size,sx[,sy[,theta]]")->required();
  simulate->add_option("--alpha", sim.alpha, "Photon level")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output counts image")->required();

  DeblurArgs deb;
  auto* deblur = app.add_subcommand("deblur", "Reconstruct a scene from photon counts");
  deblur->add_option("--method", deb.method, "pnp3, pnp2, rl or wiener")
      ->check(CLI::IsMember({"pnp3", "pnp2", "rl", "wiener"}));
  deblur->add_option("--input", deb.input, "Photon-count image")->required();
  deblur->add_option("--kernel", deb.kernel, "Kernel file or gauss:size,sx[,sy[,theta]]")->required();
  deblur->add_option("--alpha", deb.alpha, "Photon level")->required()->check(CLI::PositiveNumber);
  deblur->add_option("--denoiser", deb.denoiser, "identity, gauss:sigma, tv:weight[,iters] or median:r");
  deblur->add_option("--iters", deb.iters, "Iteration cap (rl: iteration count)")->check(CLI::NonNegativeNumber);
  deblur->add_option("--rho", deb.rho, "Initial penalty, or 'auto' for the photon-level table");
  deblur->add_flag("--fixed-rho", deb.fixed_rho, "Disable adaptive penalty growth");
  deblur->add_option("--tol", deb.delta_tol, "Stop when the mean iterate change drops below this");
  deblur->add_option("--pad", deb.pad, "reflect or none")->check(CLI::IsMember({"reflect", "none"}));
  deblur->add_option("--out", deb.out, "Output image")->required();

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Simulate and reconstruct a corpus, write CSV");
  benchmark->add_option("--corpus", bench.corpus, "Directory of ground-truth scenes")->required();
  benchmark->add_option("--kernels", bench.kernels, "Directory of kernel files, or ';'-separated specs")
      ->required();
  benchmark->add_option("--alphas", bench.alphas, "Comma-separated photon levels");
  benchmark->add_option("--methods", bench.methods, "Comma-separated methods");
  benchmark->add_option("--denoiser", bench.denoiser, "Denoiser for pnp methods");
  benchmark->add_option("--iters", bench.iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  benchmark->add_option("--seed", bench.seed, "Base random seed");
  benchmark->add_option("--out", bench.out, "Output CSV")->required();

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare unrolled gradients with finite differences");
  gradcheck->add_option("--seed", gc.seed, "Scene and noise seed");
  gradcheck->add_option("--k", gc.k, "Unrolled depth");
  gradcheck->add_option("--size", gc.size, "Image side (multiple of 4)");
  gradcheck->add_option("--alpha", gc.alpha, "Photon level")->check(CLI::PositiveNumber);
  gradcheck->add_option("--rho", gc.rho, "Penalty for every iteration")->check(CLI::PositiveNumber);
  gradcheck->add_option("--sigma", gc.sigma, "Smoothing width for every iteration")->check(CLI::NonNegativeNumber);
  gradcheck->add_flag("--corrupt-adjoint", gc.corrupt, "Break one adjoint term (self-test)");

  RawConvertArgs rc;
  auto* raw_convert = app.add_subcommand("raw-convert", "Convert a raw sensor plane to photon counts");
  raw_convert->add_option("--raw", rc.raw, "Planar little-endian uint16 samples")->required();
  raw_convert->add_option("--meta", rc.meta, "Sidecar key=value metadata")->required();
  raw_convert->add_flag("--estimate-alpha", rc.estimate, "Print the photon level heuristic");
  raw_convert->add_option("--beta", rc.beta, "Heuristic divisor")->check(CLI::Range(0.0, 1.0));
  raw_convert->add_option("--out", rc.out, "Output counts image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*deblur) return run_deblur(deb);
    if (*benchmark) return run_benchmark(bench);
    if (*gradcheck) return run_gradcheck(gc);
    if (*raw_convert) return run_raw_convert(rc);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
