#include "phi4/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

namespace phi4 {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

class FftPlans {
 public:
  FftPlans(int d, int n) {
    std::array<int, 3> dims{n, n, n};
    std::size_t real_size = 1;
    for (int i = 0; i < d; ++i) real_size *= static_cast<std::size_t>(n);
    std::size_t complex_size = real_size / n * (n / 2 + 1);
    double* r = fftw_alloc_real(real_size);
    fftw_complex* c = fftw_alloc_complex(complex_size);
    {
      std::lock_guard lock(planner_mutex());
      forward_ = fftw_plan_dft_r2c(d, dims.data(), r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
      inverse_ = fftw_plan_dft_c2r(d, dims.data(), c, r,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
    }
    fftw_free(r);
    fftw_free(c);
    if (forward_ == nullptr || inverse_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void forward(const double* in, Complex* out) const {
    // r2c plans never write to the input array.
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  // Destroys `in`.
  void inverse(Complex* in, double* out) const {
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  fftw_plan forward_{};
  fftw_plan inverse_{};
};

TorusGrid::TorusGrid(int d, int n) : d_(d), n_(n) {
  if (d < 1 || d > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3, got " + std::to_string(d));
  if (n < 8 || !is_power_of_two(n))
    throw std::invalid_argument("points per axis must be a power of two >= 8, got " + std::to_string(n));
  size_ = 1;
  for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(n);
  spectral_size_ = size_ / n * (n / 2 + 1);
  cell_volume_ = std::pow(2.0 / n, d);
  volume_ = std::pow(2.0, d);

  zeta2_.resize(spectral_size_);
  multiplicity_.resize(spectral_size_);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (std::size_t s = 0; s < spectral_size_; ++s) {
    auto k = wavevector(s);
    double k2 = 0.0;
    for (int i = 0; i < d; ++i) k2 += static_cast<double>(k[i]) * k[i];
    zeta2_[s] = pi2 * k2;
    std::size_t last = s % static_cast<std::size_t>(n / 2 + 1);
    multiplicity_[s] = (last == 0 || last == static_cast<std::size_t>(n / 2)) ? 1.0 : 2.0;
  }
  plans_ = std::make_unique<FftPlans>(d, n);
}

TorusGrid::~TorusGrid() = default;

std::array<int, 3> TorusGrid::wavevector(std::size_t s) const {
  std::array<int, 3> k{0, 0, 0};
  const std::size_t half = static_cast<std::size_t>(n_ / 2 + 1);
  std::size_t last = s % half;
  std::size_t rest = s / half;
  k[d_ - 1] = (last == static_cast<std::size_t>(n_ / 2)) ? -n_ / 2 : static_cast<int>(last);
  for (int axis = d_ - 2; axis >= 0; --axis) {
    int i = static_cast<int>(rest % static_cast<std::size_t>(n_));
    rest /= static_cast<std::size_t>(n_);
    k[axis] = i < n_ / 2 ? i : i - n_;
  }
  return k;
}

std::array<double, 3> TorusGrid::coordinate(std::size_t index) const {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int axis = d_ - 1; axis >= 0; --axis) {
    int i = static_cast<int>(index % static_cast<std::size_t>(n_));
    index /= static_cast<std::size_t>(n_);
    x[axis] = -1.0 + spacing() * i;
  }
  return x;
}

double TorusGrid::max_frequency() const {
  return std::numbers::pi * (n_ / 2) * std::sqrt(static_cast<double>(d_));
}

GridPtr make_grid(int d, int n) { return std::make_shared<const TorusGrid>(d, n); }

// ---------------------------------------------------------------- Field

Field::Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

Field::Field(GridPtr grid, double value) : grid_(std::move(grid)), values_(grid_->size(), value) {}

Field::Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw std::invalid_argument("field value count does not match grid");
}

void require_same_grid(const Field& a, const Field& b) {
  if (a.grid() != b.grid()) {
    if (!a.grid() || !b.grid() || a.grid()->dim() != b.grid()->dim() ||
        a.grid()->points_per_axis() != b.grid()->points_per_axis())
      throw std::invalid_argument("fields live on different grids");
  }
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

double Field::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field::lp_norm(double p) const {
  if (std::isinf(p)) return sup_norm();
  if (p < 1.0) throw std::invalid_argument("L^p norm needs p >= 1");
  double scale = sup_norm();
  if (scale == 0.0) return 0.0;
  // Scaled to keep large exponents (p ~ 70) in range.
  double acc = 0.0;
  for (double v : values_) acc += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(acc * grid_->cell_volume(), 1.0 / p);
}

double Field::mean() const {
  double acc = 0.0;
  for (double v : values_) acc += v;
  return acc / static_cast<double>(values_.size());
}

bool Field::bounded_by(double limit) const {
  for (double v : values_)
    if (!std::isfinite(v) || std::abs(v) > limit) return false;
  return true;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, const Field& b) { return a *= b; }
Field operator*(Field a, double s) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }
Field operator-(Field a) { return a *= -1.0; }

double inner(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * a.grid()->cell_volume();
}

// ---------------------------------------------------------------- Spectrum

Spectrum::Spectrum(GridPtr grid) : grid_(std::move(grid)), coeffs_(grid_->spectral_size()) {}

Spectrum::Spectrum(GridPtr grid, std::vector<Complex> coeffs) : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_->spectral_size()) throw std::invalid_argument("spectrum size does not match grid");
}

Complex Spectrum::at(std::array<int, 3> k) const {
  const int n = grid_->points_per_axis();
  const int d = grid_->dim();
  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  bool conj = false;
  int last = wrap(k[d - 1]);
  if (last > n / 2) {
    conj = true;
    for (int i = 0; i < d; ++i) k[i] = -k[i];
    last = wrap(k[d - 1]);
  }
  std::size_t idx = 0;
  for (int i = 0; i < d - 1; ++i) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(wrap(k[i]));
  idx = idx * static_cast<std::size_t>(n / 2 + 1) + static_cast<std::size_t>(last);
  return conj ? std::conj(coeffs_[idx]) : coeffs_[idx];
}

Spectrum& Spectrum::operator+=(const Spectrum& other) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

Spectrum& Spectrum::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Spectrum& Spectrum::apply(std::span<const double> multiplier) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] *= multiplier[i];
  return *this;
}

Spectrum to_spectral(const Field& f) {
  const auto& grid = f.grid();
  Spectrum out(grid);
  grid->plans().forward(f.values().data(), out.coeffs().data());
  out *= 1.0 / static_cast<double>(grid->size());
  return out;
}

Field to_physical(const Spectrum& s) {
  const auto& grid = s.grid();
  std::vector<Complex> scratch(s.coeffs().begin(), s.coeffs().end());
  Field out(grid);
  grid->plans().inverse(scratch.data(), out.values().data());
  return out;
}

Spectrum transform(const Field& f) { return to_spectral(f); }
Field transform(const Spectrum& s) { return to_physical(s); }

double phi1(double z) {
  if (std::abs(z) < 1e-6) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

std::vector<double> heat_multiplier(const TorusGrid& grid, double t, double mass) {
  if (t < 0.0) throw std::invalid_argument("heat semigroup needs t >= 0");
  if (mass < 0.0) throw std::invalid_argument("heat semigroup needs mass >= 0");
  auto z2 = grid.zeta_squared();
  std::vector<double> out(z2.size());
  for (std::size_t i = 0; i < z2.size(); ++i) out[i] = std::exp(-t * (z2[i] + mass));
  return out;
}

std::vector<double> phi1_multiplier(const TorusGrid& grid, double t, double mass) {
  if (t <= 0.0) throw std::invalid_argument("phi1 weight needs t > 0");
  if (mass < 0.0) throw std::invalid_argument("phi1 weight needs mass >= 0");
  auto z2 = grid.zeta_squared();
  std::vector<double> out(z2.size());
  for (std::size_t i = 0; i < z2.size(); ++i) out[i] = phi1(-t * (z2[i] + mass));
  return out;
}

Field apply_multiplier(const Field& f, std::span<const double> multiplier) {
  Spectrum s = to_spectral(f);
  s.apply(multiplier);
  return to_physical(s);
}

Field apply_heat_semigroup(const Field& f, double t, double mass) {
  auto m = heat_multiplier(*f.grid(), t, mass);
  if (t == 0.0 && mass == 0.0) return f;
  return apply_multiplier(f, m);
}

Field apply_phi1_weight(const Field& f, double t, double mass) {
  return apply_multiplier(f, phi1_multiplier(*f.grid(), t, mass));
}

ExponentialEuler::ExponentialEuler(const TorusGrid& grid, double dt, double mass)
    : dt_(dt), mass_(mass), decay_(heat_multiplier(grid, dt, mass)), weight_(phi1_multiplier(grid, dt, mass)) {
  for (double& w : weight_) w *= dt;
}

Field ExponentialEuler::operator()(const Field& f, const Field& source) const {
  require_same_grid(f, source);
  Spectrum a = to_spectral(f);
  const Spectrum b = to_spectral(source);
  if (a.size() != decay_.size()) throw std::invalid_argument("exponential Euler step built for another grid");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = decay_[i] * a[i] + weight_[i] * b[i];
  return to_physical(a);
}

Field exponential_euler(const Field& f, const Field& source, double dt, double mass) {
  return ExponentialEuler(*f.grid(), dt, mass)(f, source);
}

Field laplacian(const Field& f) {
  auto z2 = f.grid()->zeta_squared();
  std::vector<double> m(z2.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = -z2[i];
  return apply_multiplier(f, m);
}

Field partial_derivative(const Field& f, int axis) {
  const auto& grid = f.grid();
  if (axis < 0 || axis >= grid->dim()) throw std::invalid_argument("derivative axis out of range");
  Spectrum s = to_spectral(f);
  const int n = grid->points_per_axis();
  for (std::size_t i = 0; i < s.size(); ++i) {
    int k = grid->wavevector(i)[axis];
    double factor = (k == -n / 2) ? 0.0 : std::numbers::pi * k;
    s[i] *= Complex(0.0, factor);
  }
  return to_physical(s);
}

}  // namespace phi4
