#include "lorasim/phy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lorasim {

namespace {

constexpr int kMinSf = 7;
constexpr int kMaxSf = 12;

// Rows: 125, 250, 500 kHz. Columns: SF7..SF12.
constexpr std::array<std::array<double, 6>, 3> kSensitivityDbm{{
    {-123, -126, -129, -132, -133, -136},
    {-120, -123, -125, -128, -130, -133},
    {-116, -119, -122, -125, -128, -130},
}};

constexpr std::array<double, 6> kSinrThresholdDb{-7.5, -10, -12.5, -15, -17.5, -20};

void require_sf(int sf) {
  if (sf < kMinSf || sf > kMaxSf) {
    throw std::domain_error("spreading factor out of range: " + std::to_string(sf));
  }
}

}  // namespace

bool ActionSets::contains(const LoRaParams& p) const {
  return p.channel < channels_mhz.size() &&
         std::find(sfs.begin(), sfs.end(), p.sf) != sfs.end() &&
         std::find(tps_dbm.begin(), tps_dbm.end(), p.tp_dbm) != tps_dbm.end();
}

void ActionSets::validate() const {
  if (channels_mhz.empty() || sfs.empty() || tps_dbm.empty()) {
    throw std::invalid_argument("action sets must be non-empty");
  }
  if (!std::is_sorted(sfs.begin(), sfs.end()) ||
      std::adjacent_find(sfs.begin(), sfs.end()) != sfs.end()) {
    throw std::invalid_argument("sf set must be strictly increasing");
  }
  if (!std::is_sorted(tps_dbm.begin(), tps_dbm.end()) ||
      std::adjacent_find(tps_dbm.begin(), tps_dbm.end()) != tps_dbm.end()) {
    throw std::invalid_argument("tp set must be strictly increasing");
  }
  for (int sf : sfs) require_sf(sf);
}

void PathLossParams::validate() const {
  if (!(ref_distance_m > 0.0)) throw std::invalid_argument("ref_distance_m must be > 0");
  if (!(shadow_sigma_db >= 0.0)) throw std::invalid_argument("shadow_sigma_db must be >= 0");
}

void RadioConstants::validate() const {
  if (coding_rate < 1 || coding_rate > 4) throw std::invalid_argument("coding_rate must be in 1..4");
  if (preamble_symbols < 0) throw std::invalid_argument("preamble_symbols must be >= 0");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be > 0");
  if (!(awgn_sigma_db >= 0.0)) throw std::invalid_argument("awgn_sigma_db must be >= 0");
}

namespace phy {

double path_loss_db(double distance_m, const PathLossParams& p, double shadow_sample_db) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("path loss needs a positive distance");
  }
  return p.ref_loss_db + 10.0 * p.exponent * std::log10(distance_m / p.ref_distance_m) +
         shadow_sample_db;
}

double rssi_dbm(double tp_dbm, double distance_m, const PathLossParams& p,
                double shadow_sample_db) {
  return tp_dbm - path_loss_db(distance_m, p, shadow_sample_db);
}

double receiver_sensitivity_dbm(int sf, double bandwidth_hz) {
  require_sf(sf);
  std::size_t row;
  if (bandwidth_hz == 125e3) {
    row = 0;
  } else if (bandwidth_hz == 250e3) {
    row = 1;
  } else if (bandwidth_hz == 500e3) {
    row = 2;
  } else {
    throw std::domain_error("no sensitivity entry for bandwidth " + std::to_string(bandwidth_hz));
  }
  return kSensitivityDbm[row][static_cast<std::size_t>(sf - kMinSf)];
}

double sinr_threshold_db(int sf) {
  require_sf(sf);
  return kSinrThresholdDb[static_cast<std::size_t>(sf - kMinSf)];
}

int payload_symbols(int payload_bytes, int sf, const RadioConstants& c) {
  const int de = c.low_dr_opt ? 1 : 0;
  if (payload_bytes <= 0) throw std::domain_error("payload must be positive");
  if (sf <= 2 * de) throw std::domain_error("sf must exceed 2*DE");
  const int numerator = 8 * payload_bytes - 4 * sf + 28 + 16 * (c.crc ? 1 : 0) -
                        20 * (c.implicit_header ? 1 : 0);
  const int denominator = 4 * (sf - 2 * de);
  // integer ceiling that is also right for non-positive numerators
  const int blocks = numerator > 0 ? (numerator + denominator - 1) / denominator
                                   : -((-numerator) / denominator);
  return 8 + std::max(blocks * (c.coding_rate + 4), 0);
}

double symbol_time_s(int sf, double bandwidth_hz) {
  return std::ldexp(1.0, sf) / bandwidth_hz;
}

double time_on_air_s(int payload_bytes, int sf, const RadioConstants& c) {
  const double t_sym = symbol_time_s(sf, c.bandwidth_hz);
  const double preamble = (c.preamble_symbols + 4.25) * t_sym;
  return preamble + payload_symbols(payload_bytes, sf, c) * t_sym;
}

double tx_energy_mj(double tp_dbm, double toa_s, EnergyConvention convention) {
  switch (convention) {
    case EnergyConvention::PhysicalMilliwatt:
      return dbm_to_mw(tp_dbm) * toa_s;
    case EnergyConvention::PaperLiteral:
      return tp_dbm * toa_s;
  }
  return 0.0;
}

double thermal_noise_dbm(const RadioConstants& c) {
  return -174.0 + 10.0 * std::log10(c.bandwidth_hz) + c.noise_figure_db;
}

double sinr_db(double signal_rssi_dbm, std::span<const double> interferer_rssis_dbm,
               double noise_power_dbm) {
  double denominator = dbm_to_mw(noise_power_dbm);
  for (double i : interferer_rssis_dbm) denominator += dbm_to_mw(i);
  if (denominator <= 0.0) return std::numeric_limits<double>::infinity();
  return signal_rssi_dbm - mw_to_dbm(denominator);
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

}  // namespace phy
}  // namespace lorasim
