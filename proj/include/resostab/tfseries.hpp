#pragma once

#include <array>
#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "resostab/core.hpp"

namespace resostab {

using cplx = std::complex<double>;

// Harmonic vector k and monomial multi-index alpha of one term.
struct TermKey {
  int k1 = 0, k2 = 0, a1 = 0, a2 = 0;
  auto operator<=>(const TermKey&) const = default;
};

struct Caps {
  int degree = 4;
  int harmonic = 8;
};

// Sum of c * (I1 - b1)^a1 (I2 - b2)^a2 * exp(i (k1 t1 + k2 t2)) over stored terms.
class TaylorFourierSeries {
 public:
  TaylorFourierSeries() = default;
  TaylorFourierSeries(std::array<double, 2> base_point, Caps caps);

  static TaylorFourierSeries constant(std::array<double, 2> base_point, Caps caps, cplx c);

  // Accumulates into an existing coefficient. Throws StructuralError past the caps.
  void add_term(const TermKey& key, cplx c);
  cplx coefficient(const TermKey& key) const;

  const std::map<TermKey, cplx>& terms() const { return terms_; }
  std::array<double, 2> base_point() const { return base_; }
  Caps caps() const { return caps_; }
  int degree_cap() const { return caps_.degree; }
  int harmonic_cap() const { return caps_.harmonic; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  // offsets are measured from base_point; both arguments may be complex.
  cplx evaluate(std::array<cplx, 2> offsets, std::array<cplx, 2> angles) const;
  double evaluate_real(std::array<double, 2> actions, std::array<double, 2> angles) const;

  TaylorFourierSeries d_angle(int j) const;
  TaylorFourierSeries d_action(int j) const;
  TaylorFourierSeries scaled(cplx factor) const;
  TaylorFourierSeries with_caps(Caps caps) const;

  // Drops coefficients with modulus <= tol.
  void prune(double tol);
  bool conjugate_symmetric(double rel_tol = 1e-12) const;
  double coefficient_mass() const;

 private:
  std::array<double, 2> base_{0.0, 0.0};
  Caps caps_{};
  std::map<TermKey, cplx> terms_;
};

struct Truncated {
  TaylorFourierSeries series;
  double discarded_mass = 0.0;
};

TaylorFourierSeries add(const TaylorFourierSeries& a, const TaylorFourierSeries& b);
TaylorFourierSeries subtract(const TaylorFourierSeries& a, const TaylorFourierSeries& b);
Truncated multiply(const TaylorFourierSeries& a, const TaylorFourierSeries& b, Caps caps);

// {a, b} = sum_j (da/dI_j db/dt_j - da/dt_j db/dI_j), i.e. the derivative of b
// along X_a with X_F = (-dF/dt, dF/dI). With this orientation {phi, w.I} = -w.dphi/dt.
Truncated poisson_bracket(const TaylorFourierSeries& a, const TaylorFourierSeries& b, Caps caps);

struct ResonantSplit {
  TaylorFourierSeries g_part;
  TaylorFourierSeries f_part;
};
bool is_resonant_harmonic(int k1, int k2, std::array<double, 2> omega, double tol = 1e-9);
ResonantSplit resonant_split(const TaylorFourierSeries& h, std::array<double, 2> omega, double T);

// Real radius rho_j around the base point, complex action width r_j, angle strip s_j.
struct SeriesDomain {
  std::array<double, 2> rho{0.0, 0.0};
  std::array<double, 2> r{0.0, 0.0};
  std::array<double, 2> s{0.0, 0.0};
  SeriesDomain scaled(double alpha) const;
};

double majorant_norm(const TaylorFourierSeries& a, const SeriesDomain& dom);
double sample_norm(const TaylorFourierSeries& a, const SeriesDomain& dom, std::size_t n_points,
                   std::uint64_t seed, unsigned n_threads = 0);

struct ComponentSup {
  double majorant = 0.0;
  double sampled = 0.0;
  double best() const { return majorant; }
};

// Sup bounds of each component of X_a: dX^{I_j} = -da/dt_j, X^{t_j} = da/dI_j.
struct VectorFieldBounds {
  std::array<ComponentSup, 2> action;  // |da/dt_j|
  std::array<ComponentSup, 2> angle;   // |da/dI_j|
};
VectorFieldBounds vector_field_bounds(const TaylorFourierSeries& a, const SeriesDomain& dom,
                                      std::size_t n_points, std::uint64_t seed);

// Counter-based generator: the value only depends on (seed, stream, index).
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Text format: header directives "base_point b1 b2", "degree_cap n", "harmonic_cap n",
// then one term per line "k1 k2 alpha1 alpha2 re im". '#' starts a comment.
// An optional "discarded_max x" records the largest coefficient dropped by the truncation.
struct HarmonicData {
  TaylorFourierSeries series;
  double discarded_max = -1.0;  // negative when the file does not state it
};
HarmonicData parse_harmonic_data(const std::string& text);
HarmonicData read_harmonic_data(const std::string& path);
TaylorFourierSeries read_harmonic_file(const std::string& path);
TaylorFourierSeries parse_harmonic_text(const std::string& text);
std::string format_harmonic_text(const TaylorFourierSeries& s);

// Value and gradient of a real-valued series at a real point, with cached term tables.
class SeriesEvaluator {
 public:
  explicit SeriesEvaluator(const TaylorFourierSeries& s);
  struct Result {
    double value;
    std::array<double, 2> d_action;
    std::array<double, 2> d_angle;
  };
  Result operator()(std::array<double, 2> actions, std::array<double, 2> angles) const;

 private:
  struct Term {
    int k1, k2, a1, a2;
    cplx c;
  };
  std::vector<Term> terms_;
  std::array<double, 2> base_;
  int max_deg_ = 0, max_k_ = 0;
};

}  // namespace resostab
