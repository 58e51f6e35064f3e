#pragma once

// Nominal link gains (dual-exponent log-distance, gated by geometric LOS) and
// the PRB-based transmit power / per-fragment energy model.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ngo/geometry.hpp"
#include "ngo/scenario.hpp"

namespace ngo {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct ChannelParams {
  double carrier_hz{2.3e9};
  double cellular_los_exponent{2.2};
  double cellular_nlos_exponent{3.8};
  double d2d_los_exponent{2.0};
  double d2d_nlos_exponent{4.0};
  double reference_loss_1m_cell_db{40.0};
  double reference_loss_1m_d2d_db{47.0};
  double mcl_db{70.0};
  double m_cell_db{4.0};
  double m_d2d_db{10.0};
  double noise_psd_dbm_hz{-174.0};
  double b_prb_hz{180e3};
  double tau_prb_s{5e-4};
  double n_u{10000.0};
  double d_ci_bits{4e6};
  double r_d2d_m{80.0};

  void validate() const {
    if (!(b_prb_hz > 0.0) || !(tau_prb_s > 0.0) || !(n_u > 0.0) || !(d_ci_bits > 0.0) ||
        !(r_d2d_m > 0.0) || !(carrier_hz > 0.0))
      throw std::invalid_argument("channel: rates, durations and ranges must be positive");
    if (mcl_db < 0.0) throw std::invalid_argument("channel: mcl must be >= 0");
    if (cellular_los_exponent <= 0.0 || d2d_los_exponent <= 0.0 ||
        cellular_nlos_exponent < cellular_los_exponent || d2d_nlos_exponent < d2d_los_exponent)
      throw std::invalid_argument("channel: exponents must be positive with NLOS >= LOS");
  }

  /// Bits per second per Hz each PRB must carry to fit D_CI into n_u PRBs.
  double spectral_load() const { return d_ci_bits / (n_u * tau_prb_s * b_prb_hz); }
  /// Noise power in one PRB, watts.
  double noise_power_w() const { return db_to_linear(noise_psd_dbm_hz - 30.0) * b_prb_hz; }
};

/// Path loss in dB: max(mcl, ref + 10*e*log10(max(d,1))).
inline double log_distance_loss_db(double ref_db, double exponent, double d, double mcl_db) {
  const double dd = std::max(d, 1.0);
  return std::max(mcl_db, ref_db + 10.0 * exponent * std::log10(dd));
}

inline double cellular_loss_db(const Grid& grid, const ChannelParams& p, Vec2 x, Vec3 bs) {
  const Vec3 tx = lift(x, grid.spec().device_height);
  const bool los = grid.los(tx, bs);
  const double e = los ? p.cellular_los_exponent : p.cellular_nlos_exponent;
  return log_distance_loss_db(p.reference_loss_1m_cell_db, e, distance(tx, bs), p.mcl_db);
}

inline double cellular_gain(const Grid& grid, const ChannelParams& p, Vec2 x, Vec3 bs) {
  return db_to_linear(-cellular_loss_db(grid, p, x, bs));
}

inline double cellular_gain(const Grid& grid, const ChannelParams& p, Vec2 x) {
  return cellular_gain(grid, p, x, grid.bs());
}

inline double d2d_loss_db(const Grid& grid, const ChannelParams& p, Vec2 x, Vec2 y) {
  const double d = distance(x, y);
  if (d > p.r_d2d_m + 1e-9) throw std::out_of_range("d2d_gain: pair beyond D2D range");
  const double h = grid.spec().device_height;
  const bool los = grid.los(lift(x, h), lift(y, h));
  const double e = los ? p.d2d_los_exponent : p.d2d_nlos_exponent;
  return log_distance_loss_db(p.reference_loss_1m_d2d_db, e, d, p.mcl_db);
}

inline double d2d_gain(const Grid& grid, const ChannelParams& p, Vec2 x, Vec2 y) {
  return db_to_linear(-d2d_loss_db(grid, p, x, y));
}

/// P_tx = M * (1/g) * N0 * B_PRB * (2^load - 1), watts per PRB.
inline double tx_power_per_prb(const ChannelParams& p, double g, double margin_db) {
  if (!(g > 0.0)) throw std::invalid_argument("tx_power_per_prb: gain must be positive");
  return db_to_linear(margin_db) / g * p.noise_power_w() * (std::exp2(p.spectral_load()) - 1.0);
}

/// E_CI = n_u * tau_PRB * P_tx.
inline double energy_per_fragment(const ChannelParams& p, double p_tx_per_prb) {
  if (p_tx_per_prb < 0.0) throw std::invalid_argument("energy_per_fragment: negative power");
  return p.n_u * p.tau_prb_s * p_tx_per_prb;
}

inline double cellular_energy(const ChannelParams& p, double g) {
  return energy_per_fragment(p, tx_power_per_prb(p, g, p.m_cell_db));
}

inline double d2d_energy(const ChannelParams& p, double g) {
  return energy_per_fragment(p, tx_power_per_prb(p, g, p.m_d2d_db));
}

/// Energy to send `bits` using PRBs at the same spectral load as a fragment.
inline double message_energy(const ChannelParams& p, double g, double margin_db, double bits) {
  const double bits_per_prb = p.d_ci_bits / p.n_u;
  const double prbs = std::ceil(bits / bits_per_prb);
  return prbs * p.tau_prb_s * tx_power_per_prb(p, g, margin_db);
}

/// Cellular fragment cost for every tile of the global street lattice.
class CellCostMap {
 public:
  CellCostMap(const Grid& grid, const ChannelParams& params)
      : nx_(grid.lattice_nx()), ny_(grid.lattice_ny()),
        cost_(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), -1.0) {
    const Vec3 bs = grid.bs();
    for (int iy = 0; iy < ny_; ++iy)
      for (int ix = 0; ix < nx_; ++ix) {
        const Vec2 c = grid.lattice_center(ix, iy);
        if (!grid.on_street(c)) continue;
        cost_[index(ix, iy)] = cellular_energy(params, cellular_gain(grid, params, c, bs));
      }
  }

  /// Negative for non-street tiles.
  double at(int ix, int iy) const { return cost_[index(ix, iy)]; }

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ix);
  }
  int nx_;
  int ny_;
  std::vector<double> cost_;
};

}  // namespace ngo
