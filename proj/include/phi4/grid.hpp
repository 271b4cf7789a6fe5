#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace phi4 {

using Complex = std::complex<double>;

class FftPlans;

/// Discrete torus [-1,1]^d with n points per axis.
///
/// Fourier coefficients are stored in the half-spectrum layout of a real
/// transform: the last axis keeps indices 0..n/2, every other axis keeps the
/// full range. The wavevector of a stored entry is zeta = pi * k with each
/// component of k in {-n/2, ..., n/2 - 1}; the stored last-axis entry n/2 is
/// the Nyquist mode k = -n/2.
class TorusGrid {
 public:
  TorusGrid(int d, int n);
  ~TorusGrid();
  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;

  int dim() const { return d_; }
  int points_per_axis() const { return n_; }
  std::size_t size() const { return size_; }
  std::size_t spectral_size() const { return spectral_size_; }
  double side() const { return 2.0; }
  double spacing() const { return 2.0 / n_; }
  double cell_volume() const { return cell_volume_; }
  double volume() const { return volume_; }

  /// |zeta|^2 for each half-spectrum entry.
  std::span<const double> zeta_squared() const { return zeta2_; }
  /// Number of full-lattice modes represented by each half-spectrum entry (1 or 2).
  std::span<const double> multiplicity() const { return multiplicity_; }
  /// Integer wavevector of each half-spectrum entry, in {-n/2, ..., n/2-1}^d.
  std::array<int, 3> wavevector(std::size_t spectral_index) const;
  /// Physical coordinate of grid point `index`, each component in [-1, 1).
  std::array<double, 3> coordinate(std::size_t index) const;
  /// Largest |zeta| over the represented lattice.
  double max_frequency() const;

  const FftPlans& plans() const { return *plans_; }

 private:
  int d_;
  int n_;
  std::size_t size_;
  std::size_t spectral_size_;
  double cell_volume_;
  double volume_;
  std::vector<double> zeta2_;
  std::vector<double> multiplicity_;
  std::unique_ptr<FftPlans> plans_;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

/// Rejects d outside {1,2,3} and n that is not a power of two >= 8.
GridPtr make_grid(int d, int n);

class Spectrum;

/// Real scalar field on a torus grid, stored as physical values.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid);
  Field(GridPtr grid, double value);
  Field(GridPtr grid, std::vector<double> values);

  const GridPtr& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(const Field& other);
  Field& operator*=(double s);

  double sup_norm() const;
  /// L^p norm with Lebesgue measure on [-1,1]^d; p = infinity gives the grid maximum.
  double lp_norm(double p) const;
  double mean() const;
  /// True when every value is finite and below `limit` in magnitude.
  bool bounded_by(double limit) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, const Field& b);
Field operator*(Field a, double s);
Field operator*(double s, Field a);
Field operator-(Field a);

/// L^2 inner product on [-1,1]^d.
double inner(const Field& a, const Field& b);

void require_same_grid(const Field& a, const Field& b);

/// Half-spectrum Fourier coefficients, normalized so that a constant field c
/// has coefficient c at k = 0: f(x) = sum_k f_k exp(i pi k.x).
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(GridPtr grid);
  Spectrum(GridPtr grid, std::vector<Complex> coeffs);

  const GridPtr& grid() const { return grid_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  std::span<Complex> coeffs() { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  Complex operator[](std::size_t i) const { return coeffs_[i]; }
  Complex& operator[](std::size_t i) { return coeffs_[i]; }

  /// Coefficient at an arbitrary integer wavevector, using Hermitian symmetry
  /// for entries not stored in the half layout.
  Complex at(std::array<int, 3> k) const;

  Spectrum& operator+=(const Spectrum& other);
  Spectrum& operator*=(double s);
  /// Per-entry multiplication by a real multiplier sampled on the half lattice.
  Spectrum& apply(std::span<const double> multiplier);

 private:
  GridPtr grid_;
  std::vector<Complex> coeffs_;
};

Spectrum to_spectral(const Field& f);
Field to_physical(const Spectrum& s);

/// Forward (field -> spectrum) and inverse (spectrum -> field) transforms.
Spectrum transform(const Field& f);
Field transform(const Spectrum& s);

/// Per-mode multiplier exp(-t(|zeta|^2 + mass)). Rejects t < 0 or mass < 0.
std::vector<double> heat_multiplier(const TorusGrid& grid, double t, double mass = 0.0);

/// phi1(z) = (e^z - 1)/z, evaluated by series near zero.
double phi1(double z);

/// Per-mode multiplier phi1(-t(|zeta|^2 + mass)). Rejects t <= 0.
std::vector<double> phi1_multiplier(const TorusGrid& grid, double t, double mass = 0.0);

Field apply_heat_semigroup(const Field& f, double t, double mass = 0.0);
Field apply_phi1_weight(const Field& f, double t, double mass = 0.0);

Field apply_multiplier(const Field& f, std::span<const double> multiplier);

/// One exponential-Euler step of (d/dt - Delta + mass) f = source, source frozen over dt:
/// f <- e^{dt(Delta - mass)} f + dt phi1(-dt(|zeta|^2 + mass)) source. Multipliers are cached.
class ExponentialEuler {
 public:
  ExponentialEuler(const TorusGrid& grid, double dt, double mass = 0.0);
  Field operator()(const Field& f, const Field& source) const;
  double dt() const { return dt_; }
  double mass() const { return mass_; }

 private:
  double dt_;
  double mass_;
  std::vector<double> decay_;
  std::vector<double> weight_;
};

Field exponential_euler(const Field& f, const Field& source, double dt, double mass = 0.0);

/// Spectral Laplacian.
Field laplacian(const Field& f);
/// Spectral partial derivative along `axis`; the Nyquist component is dropped.
Field partial_derivative(const Field& f, int axis);

/// Field sampled from a function of the physical coordinate.
template <class Fn>
Field sample_field(const GridPtr& grid, Fn&& fn) {
  Field out(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) out[i] = fn(grid->coordinate(i));
  return out;
}

}  // namespace phi4
