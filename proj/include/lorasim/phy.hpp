#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace lorasim {

/// One (channel, SF, TP) configuration. The channel is an index into
/// ActionSets::channels_mhz so that comparisons give the lexicographic
/// (CF, SF, TP) order used for tie-breaking.
struct LoRaParams {
  std::size_t channel = 0;
  int sf = 7;
  int tp_dbm = 14;

  auto operator<=>(const LoRaParams&) const = default;
};

/// The finite action sets a node may draw its parameters from.
struct ActionSets {
  std::vector<double> channels_mhz{868.1, 868.3, 868.5, 868.7,
                                   868.9, 869.1, 869.3, 869.5};
  std::vector<int> sfs{7, 8, 9, 10, 11, 12};
  std::vector<int> tps_dbm{2, 4, 6, 8, 10, 12, 14};

  [[nodiscard]] std::size_t super_arm_count() const {
    return channels_mhz.size() * sfs.size() * tps_dbm.size();
  }
  [[nodiscard]] bool contains(const LoRaParams& p) const;
  /// Throws std::invalid_argument when any set is empty or unsorted.
  void validate() const;
};

/// Log-distance path loss parameters.
struct PathLossParams {
  double ref_loss_db = 128.95;
  double ref_distance_m = 1000.0;
  double exponent = 1.0;
  double shadow_sigma_db = 7.8;

  bool operator==(const PathLossParams&) const = default;
  void validate() const;
};

struct RadioConstants {
  double bandwidth_hz = 125e3;
  int coding_rate = 1;  // 1..4, i.e. 4/5..4/8
  int preamble_symbols = 8;
  bool crc = true;
  bool implicit_header = false;  // H flag, 0 = explicit header
  bool low_dr_opt = false;       // DE flag
  double noise_figure_db = 6.0;
  double awgn_sigma_db = 1.0;

  void validate() const;
};

enum class EnergyConvention {
  PhysicalMilliwatt,  // 10^(tp/10) mW times airtime
  PaperLiteral,       // raw dBm number times airtime
};

namespace phy {

/// Mean path loss plus the externally drawn shadowing sample.
/// Throws std::domain_error when distance_m <= 0.
double path_loss_db(double distance_m, const PathLossParams& p,
                    double shadow_sample_db);

double rssi_dbm(double tp_dbm, double distance_m, const PathLossParams& p,
                double shadow_sample_db);

/// Semtech datasheet sensitivity table for BW in {125, 250, 500} kHz.
double receiver_sensitivity_dbm(int sf, double bandwidth_hz);

/// Demodulation SINR floor per spreading factor.
double sinr_threshold_db(int sf);

int payload_symbols(int payload_bytes, int sf, const RadioConstants& consts);

double symbol_time_s(int sf, double bandwidth_hz);

double time_on_air_s(int payload_bytes, int sf, const RadioConstants& consts);

double tx_energy_mj(double tp_dbm, double toa_s, EnergyConvention convention);

/// Thermal noise floor -174 + 10 log10(BW) + NF, before the AWGN jitter.
double thermal_noise_dbm(const RadioConstants& consts);

/// SINR in dB, computed in the linear mW domain. A noise power of -inf
/// means a noiseless receiver.
double sinr_db(double signal_rssi_dbm, std::span<const double> interferer_rssis_dbm,
               double noise_power_dbm);

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

}  // namespace phy
}  // namespace lorasim
