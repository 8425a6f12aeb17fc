#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/data/preprocess.hpp"
#include "emolat/models/network.hpp"

namespace emolat {

/// Trained model plus what is needed to embed raw features with it.
struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::optional<Standardizer> standardizer;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    auto same_std = [](const std::optional<Standardizer>& x, const std::optional<Standardizer>& y) {
      if (x.has_value() != y.has_value()) return false;
      return !x || (x->mean == y->mean && x->stddev == y->stddev);
    };
    return a.params == b.params && a.seed == b.seed && same_std(a.standardizer, b.standardizer);
  }
};

// Text format, one record per line, reals as C99 hex floats so the round
// trip is bit-exact:
//   emolat-checkpoint 1
//   variant vae_ss
//   ...
//   tensor <name> <rows> <cols>
//   <values...>
//   end

namespace detail {

inline std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_real(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw FormatError("checkpoint: bad real '" + token + "'");
  return v;
}

inline void write_vector(std::ostream& out, const char* key, const std::vector<double>& v) {
  out << key << ' ' << v.size();
  for (double x : v) out << ' ' << hex(x);
  out << '\n';
}

}  // namespace detail

inline void write_checkpoint(const Checkpoint& ck, std::ostream& out) {
  const auto& c = ck.params.config;
  out << "emolat-checkpoint 1\n";
  out << "variant " << variant_name(c.variant) << '\n';
  out << "activation " << activation_name(c.activation) << '\n';
  out << "input_dim " << c.input_dim << '\n';
  out << "hidden " << c.hidden.size();
  for (std::size_t h : c.hidden) out << ' ' << h;
  out << '\n';
  out << "latent_dim " << c.latent_dim << '\n';
  out << "dae_noise " << detail::hex(c.dae_noise) << '\n';
  out << "gamma " << detail::hex(c.gamma) << '\n';
  out << "logvar_clamp " << detail::hex(c.logvar_clamp) << '\n';
  out << "vae_reconstruction " << reduction_name(c.vae_reconstruction) << '\n';
  out << "annealing " << c.annealing.cycles << ' ' << detail::hex(c.annealing.ratio) << ' '
      << detail::hex(c.annealing.beta_max) << '\n';
  out << "seed " << ck.seed << '\n';
  if (ck.standardizer) {
    detail::write_vector(out, "standardizer_mean", ck.standardizer->mean);
    detail::write_vector(out, "standardizer_std", ck.standardizer->stddev);
  }
  const auto tensors = ck.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Matrix& m = *tensors[i];
    out << "tensor " << i << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t j = 0; j < m.size(); ++j) out << (j ? " " : "") << detail::hex(m.data()[j]);
    out << '\n';
  }
  out << "end\n";
}

inline Checkpoint read_checkpoint(std::istream& in) {
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(in >> k) || k != key) throw FormatError("checkpoint: expected '" + key + "', found '" + k + "'");
  };
  auto real = [&] {
    std::string t;
    if (!(in >> t)) throw FormatError("checkpoint: truncated");
    return detail::parse_real(t);
  };
  auto count = [&] {
    std::size_t n = 0;
    if (!(in >> n)) throw FormatError("checkpoint: expected an integer");
    return n;
  };
  auto word = [&] {
    std::string t;
    if (!(in >> t)) throw FormatError("checkpoint: truncated");
    return t;
  };

  expect("emolat-checkpoint");
  if (count() != 1) throw FormatError("checkpoint: unsupported version");
  EncoderDecoderConfig c;
  expect("variant");
  c.variant = parse_variant(word());
  expect("activation");
  c.activation = parse_activation(word());
  expect("input_dim");
  c.input_dim = count();
  expect("hidden");
  c.hidden.resize(count());
  for (auto& h : c.hidden) h = count();
  expect("latent_dim");
  c.latent_dim = count();
  expect("dae_noise");
  c.dae_noise = real();
  expect("gamma");
  c.gamma = real();
  expect("logvar_clamp");
  c.logvar_clamp = real();
  expect("vae_reconstruction");
  c.vae_reconstruction = parse_reduction(word());
  expect("annealing");
  c.annealing.cycles = count();
  c.annealing.ratio = real();
  c.annealing.beta_max = real();

  Checkpoint ck;
  expect("seed");
  if (!(in >> ck.seed)) throw FormatError("checkpoint: bad seed");

  // Shapes come from the config; stored shapes must agree.
  Rng shape_rng(0);
  ck.params = init_params(c, shape_rng);
  std::string key = word();
  if (key == "standardizer_mean") {
    Standardizer s;
    s.mean.resize(count());
    for (double& v : s.mean) v = real();
    expect("standardizer_std");
    s.stddev.resize(count());
    for (double& v : s.stddev) v = real();
    ck.standardizer = std::move(s);
    key = word();
  }
  auto tensors = ck.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (key != "tensor") throw FormatError("checkpoint: expected 'tensor', found '" + key + "'");
    const std::size_t id = count(), rows = count(), cols = count();
    if (id != i || rows != tensors[i]->rows() || cols != tensors[i]->cols()) {
      throw FormatError("checkpoint: tensor " + std::to_string(i) + " has unexpected shape " +
                        Matrix::shape_string(rows, cols));
    }
    for (double& v : tensors[i]->data()) v = real();
    key = word();
  }
  if (key != "end") throw FormatError("checkpoint: expected 'end', found '" + key + "'");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(ck, out);
  if (!out) throw IoError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace emolat
