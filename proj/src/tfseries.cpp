#include "resostab/tfseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace resostab {

namespace {

bool within_caps(const TermKey& k, Caps caps) {
  return k.a1 >= 0 && k.a2 >= 0 && k.a1 + k.a2 <= caps.degree && std::abs(k.k1) <= caps.harmonic &&
         std::abs(k.k2) <= caps.harmonic;
}

void require_same_base(const TaylorFourierSeries& a, const TaylorFourierSeries& b) {
  if (a.base_point() != b.base_point()) throw StructuralError("series have different base points");
}

Caps max_caps(Caps a, Caps b) {
  return {std::max(a.degree, b.degree), std::max(a.harmonic, b.harmonic)};
}

// Powers z^0..z^n.
std::vector<cplx> powers(cplx z, int n) {
  std::vector<cplx> out(static_cast<std::size_t>(n) + 1);
  out[0] = 1.0;
  for (int i = 1; i <= n; ++i) out[i] = out[i - 1] * z;
  return out;
}

// exp(i k t) for k in [-n, n], stored at index k + n.
std::vector<cplx> harmonics(cplx t, int n) {
  std::vector<cplx> out(2 * static_cast<std::size_t>(n) + 1);
  const cplx e = std::exp(cplx(0.0, 1.0) * t);
  const cplx einv = 1.0 / e;
  out[n] = 1.0;
  for (int k = 1; k <= n; ++k) {
    out[n + k] = out[n + k - 1] * e;
    out[n - k] = out[n - k + 1] * einv;
  }
  return out;
}

}  // namespace

TaylorFourierSeries::TaylorFourierSeries(std::array<double, 2> base_point, Caps caps)
    : base_(base_point), caps_(caps) {
  if (caps.degree < 0 || caps.harmonic < 0) throw StructuralError("caps must be nonnegative");
}

TaylorFourierSeries TaylorFourierSeries::constant(std::array<double, 2> base_point, Caps caps, cplx c) {
  TaylorFourierSeries s(base_point, caps);
  s.add_term({0, 0, 0, 0}, c);
  return s;
}

void TaylorFourierSeries::add_term(const TermKey& key, cplx c) {
  if (!within_caps(key, caps_)) throw StructuralError("term exceeds series caps");
  if (c == cplx(0.0, 0.0)) return;
  auto [it, inserted] = terms_.try_emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx(0.0, 0.0)) terms_.erase(it);
  }
}

cplx TaylorFourierSeries::coefficient(const TermKey& key) const {
  auto it = terms_.find(key);
  return it == terms_.end() ? cplx(0.0, 0.0) : it->second;
}

cplx TaylorFourierSeries::evaluate(std::array<cplx, 2> offsets, std::array<cplx, 2> angles) const {
  int deg = 0, kmax = 0;
  for (const auto& [k, c] : terms_) {
    deg = std::max({deg, k.a1, k.a2});
    kmax = std::max({kmax, std::abs(k.k1), std::abs(k.k2)});
  }
  const auto z1 = powers(offsets[0], deg), z2 = powers(offsets[1], deg);
  const auto e1 = harmonics(angles[0], kmax), e2 = harmonics(angles[1], kmax);
  cplx sum = 0.0;
  for (const auto& [k, c] : terms_) sum += c * z1[k.a1] * z2[k.a2] * e1[k.k1 + kmax] * e2[k.k2 + kmax];
  return sum;
}

double TaylorFourierSeries::evaluate_real(std::array<double, 2> actions, std::array<double, 2> angles) const {
  return evaluate({cplx(actions[0] - base_[0]), cplx(actions[1] - base_[1])}, {cplx(angles[0]), cplx(angles[1])})
      .real();
}

TaylorFourierSeries TaylorFourierSeries::d_angle(int j) const {
  TaylorFourierSeries out(base_, caps_);
  for (const auto& [k, c] : terms_) {
    const int kj = j == 0 ? k.k1 : k.k2;
    if (kj != 0) out.add_term(k, c * cplx(0.0, static_cast<double>(kj)));
  }
  return out;
}

TaylorFourierSeries TaylorFourierSeries::d_action(int j) const {
  TaylorFourierSeries out(base_, caps_);
  for (const auto& [k, c] : terms_) {
    const int aj = j == 0 ? k.a1 : k.a2;
    if (aj == 0) continue;
    TermKey nk = k;
    (j == 0 ? nk.a1 : nk.a2) -= 1;
    out.add_term(nk, c * static_cast<double>(aj));
  }
  return out;
}

TaylorFourierSeries TaylorFourierSeries::scaled(cplx factor) const {
  TaylorFourierSeries out(base_, caps_);
  for (const auto& [k, c] : terms_) out.add_term(k, c * factor);
  return out;
}

TaylorFourierSeries TaylorFourierSeries::with_caps(Caps caps) const {
  TaylorFourierSeries out(base_, caps);
  for (const auto& [k, c] : terms_)
    if (within_caps(k, caps)) out.add_term(k, c);
  return out;
}

void TaylorFourierSeries::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

bool TaylorFourierSeries::conjugate_symmetric(double rel_tol) const {
  const double scale = std::max(coefficient_mass(), 1e-300);
  for (const auto& [k, c] : terms_) {
    const cplx partner = coefficient({-k.k1, -k.k2, k.a1, k.a2});
    if (std::abs(partner - std::conj(c)) > rel_tol * scale) return false;
  }
  return true;
}

double TaylorFourierSeries::coefficient_mass() const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) m += std::abs(c);
  return m;
}

TaylorFourierSeries add(const TaylorFourierSeries& a, const TaylorFourierSeries& b) {
  require_same_base(a, b);
  TaylorFourierSeries out(a.base_point(), max_caps(a.caps(), b.caps()));
  for (const auto& [k, c] : a.terms()) out.add_term(k, c);
  for (const auto& [k, c] : b.terms()) out.add_term(k, c);
  return out;
}

TaylorFourierSeries subtract(const TaylorFourierSeries& a, const TaylorFourierSeries& b) {
  return add(a, b.scaled(-1.0));
}

Truncated multiply(const TaylorFourierSeries& a, const TaylorFourierSeries& b, Caps caps) {
  require_same_base(a, b);
  Truncated out{TaylorFourierSeries(a.base_point(), caps), 0.0};
  std::map<TermKey, cplx> acc;
  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      const TermKey k{ka.k1 + kb.k1, ka.k2 + kb.k2, ka.a1 + kb.a1, ka.a2 + kb.a2};
      const cplx c = ca * cb;
      if (within_caps(k, caps))
        acc[k] += c;
      else
        out.discarded_mass += std::abs(c);
    }
  }
  for (const auto& [k, c] : acc) out.series.add_term(k, c);
  return out;
}

Truncated poisson_bracket(const TaylorFourierSeries& a, const TaylorFourierSeries& b, Caps caps) {
  require_same_base(a, b);
  Truncated out{TaylorFourierSeries(a.base_point(), caps), 0.0};
  for (int j = 0; j < 2; ++j) {
    auto t1 = multiply(a.d_action(j), b.d_angle(j), caps);
    auto t2 = multiply(a.d_angle(j), b.d_action(j), caps);
    out.series = add(out.series, subtract(t1.series, t2.series)).with_caps(caps);
    out.discarded_mass += t1.discarded_mass + t2.discarded_mass;
  }
  return out;
}

bool is_resonant_harmonic(int k1, int k2, std::array<double, 2> omega, double tol) {
  const double kw = k1 * omega[0] + k2 * omega[1];
  const double scale = std::abs(k1 * omega[0]) + std::abs(k2 * omega[1]);
  return std::abs(kw) <= tol * std::max(scale, 1e-300);
}

ResonantSplit resonant_split(const TaylorFourierSeries& h, std::array<double, 2> omega, double T) {
  if (!(T > 0.0)) throw DomainError("period must be positive");
  ResonantSplit out{TaylorFourierSeries(h.base_point(), h.caps()), TaylorFourierSeries(h.base_point(), h.caps())};
  for (const auto& [k, c] : h.terms()) {
    if (k.k1 == 0 && k.k2 == 0) {
      out.g_part.add_term(k, c);
      continue;
    }
    const double turns = (k.k1 * omega[0] + k.k2 * omega[1]) * T / (2.0 * std::numbers::pi);
    if (std::abs(turns - std::round(turns)) > 1e-6 * (std::abs(k.k1) + std::abs(k.k2)))
      throw DomainError("frequency vector is not T-periodic for a retained harmonic");
    (is_resonant_harmonic(k.k1, k.k2, omega) ? out.g_part : out.f_part).add_term(k, c);
  }
  return out;
}

SeriesDomain SeriesDomain::scaled(double alpha) const {
  SeriesDomain d = *this;
  for (int j = 0; j < 2; ++j) {
    d.r[j] *= alpha;
    d.s[j] *= alpha;
  }
  return d;
}

double majorant_norm(const TaylorFourierSeries& a, const SeriesDomain& dom) {
  const double R1 = dom.rho[0] + dom.r[0], R2 = dom.rho[1] + dom.r[1];
  double sum = 0.0;
  for (const auto& [k, c] : a.terms())
    sum += std::abs(c) * std::pow(R1, k.a1) * std::pow(R2, k.a2) *
           std::exp(std::abs(k.k1) * dom.s[0] + std::abs(k.k2) * dom.s[1]);
  return sum;
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finalizer applied to a mixed counter
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1) + 0xd1b54a32d192ed03ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return static_cast<double>(counter_hash(seed, stream, index) >> 11) * 0x1.0p-53;
}

double sample_norm(const TaylorFourierSeries& a, const SeriesDomain& dom, std::size_t n_points,
                   std::uint64_t seed, unsigned n_threads) {
  if (n_points == 0) throw DomainError("n_points must be >= 1");
  if (a.empty()) return 0.0;
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, (n_points + 4095) / 4096));
  n_threads = std::max(1u, n_threads);

  const double two_pi = 2.0 * std::numbers::pi;
  auto point_value = [&](std::size_t i) {
    std::array<cplx, 2> z, t;
    for (int j = 0; j < 2; ++j) {
      const std::uint64_t base = 4 * static_cast<std::uint64_t>(j);
      const double centre = counter_uniform(seed, base, i) < 0.5 ? -dom.rho[j] : dom.rho[j];
      const double phase = two_pi * counter_uniform(seed, base + 1, i);
      z[j] = centre + dom.r[j] * cplx(std::cos(phase), std::sin(phase));
      const double re = two_pi * counter_uniform(seed, base + 2, i);
      const double im = counter_uniform(seed, base + 3, i) < 0.5 ? -dom.s[j] : dom.s[j];
      t[j] = cplx(re, im);
    }
    return std::abs(a.evaluate(z, t));
  };

  std::vector<double> partial(n_threads, 0.0);
  std::vector<std::thread> workers;
  const std::size_t chunk = (n_points + n_threads - 1) / n_threads;
  for (unsigned w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      const std::size_t lo = w * chunk, hi = std::min(n_points, lo + chunk);
      double best = 0.0;
      for (std::size_t i = lo; i < hi; ++i) best = std::max(best, point_value(i));
      partial[w] = best;
    });
  }
  for (auto& t : workers) t.join();
  return *std::max_element(partial.begin(), partial.end());
}

VectorFieldBounds vector_field_bounds(const TaylorFourierSeries& a, const SeriesDomain& dom,
                                      std::size_t n_points, std::uint64_t seed) {
  VectorFieldBounds out;
  for (int j = 0; j < 2; ++j) {
    const auto dt = a.d_angle(j);
    const auto dI = a.d_action(j);
    out.action[j].majorant = majorant_norm(dt, dom);
    out.angle[j].majorant = majorant_norm(dI, dom);
    if (n_points > 0) {
      out.action[j].sampled = sample_norm(dt, dom, n_points, seed + 17 * j + 1);
      out.angle[j].sampled = sample_norm(dI, dom, n_points, seed + 17 * j + 2);
    }
  }
  return out;
}

HarmonicData parse_harmonic_data(const std::string& text) {
  std::array<double, 2> base{0.0, 0.0};
  double discarded_max = -1.0;
  Caps caps{};
  bool have_base = false;
  struct Row {
    TermKey k;
    cplx c;
  };
  std::vector<Row> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    auto fail = [&](const std::string& what) {
      throw StructuralError("harmonic file line " + std::to_string(lineno) + ": " + what);
    };
    if (first == "base_point") {
      if (!(ls >> base[0] >> base[1])) fail("base_point needs two values");
      have_base = true;
    } else if (first == "degree_cap") {
      if (!(ls >> caps.degree)) fail("degree_cap needs an integer");
    } else if (first == "harmonic_cap") {
      if (!(ls >> caps.harmonic)) fail("harmonic_cap needs an integer");
    } else if (first == "discarded_max") {
      if (!(ls >> discarded_max) || discarded_max < 0) fail("discarded_max needs a nonnegative value");
    } else {
      Row r{};
      std::istringstream rs(line);
      double re = 0, im = 0;
      if (!(rs >> r.k.k1 >> r.k.k2 >> r.k.a1 >> r.k.a2 >> re >> im)) fail("expected 'k1 k2 a1 a2 re im'");
      r.c = cplx(re, im);
      rows.push_back(r);
    }
  }
  if (!have_base) throw StructuralError("harmonic file is missing base_point");
  TaylorFourierSeries s(base, caps);
  for (const auto& r : rows) s.add_term(r.k, r.c);
  return {std::move(s), discarded_max};
}

TaylorFourierSeries parse_harmonic_text(const std::string& text) { return parse_harmonic_data(text).series; }

HarmonicData read_harmonic_data(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw StructuralError("cannot open harmonic file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_harmonic_data(ss.str());
}

TaylorFourierSeries read_harmonic_file(const std::string& path) { return read_harmonic_data(path).series; }

std::string format_harmonic_text(const TaylorFourierSeries& s) {
  std::ostringstream out;
  out.precision(17);
  out << "base_point " << s.base_point()[0] << " " << s.base_point()[1] << "\n";
  out << "degree_cap " << s.degree_cap() << "\n";
  out << "harmonic_cap " << s.harmonic_cap() << "\n";
  for (const auto& [k, c] : s.terms())
    out << k.k1 << " " << k.k2 << " " << k.a1 << " " << k.a2 << " " << c.real() << " " << c.imag() << "\n";
  return out.str();
}

SeriesEvaluator::SeriesEvaluator(const TaylorFourierSeries& s) : base_(s.base_point()) {
  for (const auto& [k, c] : s.terms()) {
    terms_.push_back({k.k1, k.k2, k.a1, k.a2, c});
    max_deg_ = std::max({max_deg_, k.a1, k.a2});
    max_k_ = std::max({max_k_, std::abs(k.k1), std::abs(k.k2)});
  }
}

SeriesEvaluator::Result SeriesEvaluator::operator()(std::array<double, 2> actions,
                                                    std::array<double, 2> angles) const {
  const int n = max_deg_ + 1;
  thread_local std::vector<double> z1, z2;
  thread_local std::vector<cplx> e1, e2;
  z1.resize(n);
  z2.resize(n);
  z1[0] = z2[0] = 1.0;
  const double d1 = actions[0] - base_[0], d2 = actions[1] - base_[1];
  for (int i = 1; i < n; ++i) {
    z1[i] = z1[i - 1] * d1;
    z2[i] = z2[i - 1] * d2;
  }
  const int nk = 2 * max_k_ + 1;
  e1.resize(nk);
  e2.resize(nk);
  for (int j = 0; j < 2; ++j) {
    auto& e = j == 0 ? e1 : e2;
    const cplx u(std::cos(angles[j]), std::sin(angles[j]));
    e[max_k_] = 1.0;
    for (int k = 1; k <= max_k_; ++k) {
      e[max_k_ + k] = e[max_k_ + k - 1] * u;
      e[max_k_ - k] = std::conj(e[max_k_ + k]);
    }
  }
  cplx v = 0, dI1 = 0, dI2 = 0, dt1 = 0, dt2 = 0;
  for (const auto& t : terms_) {
    const cplx e = t.c * e1[t.k1 + max_k_] * e2[t.k2 + max_k_];
    const double mono = z1[t.a1] * z2[t.a2];
    const cplx val = e * mono;
    v += val;
    dt1 += cplx(0.0, t.k1) * val;
    dt2 += cplx(0.0, t.k2) * val;
    if (t.a1 > 0) dI1 += e * (t.a1 * z1[t.a1 - 1] * z2[t.a2]);
    if (t.a2 > 0) dI2 += e * (t.a2 * z1[t.a1] * z2[t.a2 - 1]);
  }
  return {v.real(), {dI1.real(), dI2.real()}, {dt1.real(), dt2.real()}};
}

}  // namespace resostab
