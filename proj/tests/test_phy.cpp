#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lorasim/phy.hpp"

using namespace lorasim;

namespace {

// Independent airtime oracle: symbol counts in integer arithmetic, times in
// microseconds so that 125 kHz values stay exact.
struct AirtimeOracle {
  static long long ceil_div(long long a, long long b) {
    if (a <= 0) return 0;
    return (a + b - 1) / b;
  }
  static int symbols(int ps, int sf, int cr, bool crc, bool h, bool de) {
    const long long num = 8LL * ps - 4LL * sf + 28 + (crc ? 16 : 0) - (h ? 20 : 0);
    const long long den = 4LL * (sf - (de ? 2 : 0));
    return 8 + static_cast<int>(ceil_div(num, den) * (cr + 4));
  }
  // microseconds at 125 kHz: T_sym = 2^SF / 125000 s = 8 * 2^SF us
  static double toa_us(int ps, int sf) {
    const long long t_sym_us = 8LL << sf;
    const long long quarter_symbols = 4LL * (8 + symbols(ps, sf, 1, true, false, false)) + 17;
    return static_cast<double>(quarter_symbols * t_sym_us) / 4.0;
  }
};

}  // namespace

TEST_CASE("path loss and rssi at the reference settings") {
  const PathLossParams p;  // 128.95 dB at 1000 m, exponent 1, sigma 7.8
  CHECK(phy::path_loss_db(1000.0, p, 0.0) == 128.95);
  CHECK(phy::path_loss_db(2000.0, p, 0.0) == doctest::Approx(128.95 + 10.0 * std::log10(2.0)).epsilon(1e-12));
  CHECK(phy::path_loss_db(2000.0, p, 0.0) == doctest::Approx(131.96).epsilon(1e-4));
  CHECK(phy::path_loss_db(1000.0, p, 7.8) == doctest::Approx(136.75).epsilon(1e-12));
  CHECK(phy::rssi_dbm(14.0, 1000.0, p, 0.0) == doctest::Approx(-114.95).epsilon(1e-12));
  CHECK(phy::rssi_dbm(2.0, 1000.0, p, 0.0) == doctest::Approx(-126.95).epsilon(1e-12));

  PathLossParams steep = p;
  steep.exponent = 3.7;
  CHECK(phy::rssi_dbm(10.0, steep.ref_distance_m, steep, 0.0) == 10.0 - steep.ref_loss_db);
}

TEST_CASE("path loss rejects non-positive distance") {
  const PathLossParams p;
  CHECK_THROWS_AS(phy::path_loss_db(0.0, p, 0.0), std::domain_error);
  CHECK_THROWS_AS(phy::path_loss_db(-5.0, p, 0.0), std::domain_error);
  CHECK_THROWS_AS(phy::rssi_dbm(14.0, 0.0, p, 0.0), std::domain_error);
}

TEST_CASE("path loss grows with distance and exponent") {
  const PathLossParams p;
  double last = -std::numeric_limits<double>::infinity();
  for (double d = 10.0; d < 5000.0; d *= 1.37) {
    const double l = phy::path_loss_db(d, p, 0.0);
    CHECK(l > last);
    last = l;
  }
}

TEST_CASE("sensitivity table is exact for every entry") {
  const double bws[] = {125e3, 250e3, 500e3};
  const double table[3][6] = {{-123, -126, -129, -132, -133, -136},
                              {-120, -123, -125, -128, -130, -133},
                              {-116, -119, -122, -125, -128, -130}};
  for (int row = 0; row < 3; ++row) {
    for (int sf = 7; sf <= 12; ++sf) {
      CAPTURE(row);
      CAPTURE(sf);
      CHECK(phy::receiver_sensitivity_dbm(sf, bws[row]) == table[row][sf - 7]);
    }
  }
  CHECK(phy::receiver_sensitivity_dbm(9, 500e3) == -122.0);
  CHECK_THROWS_AS(phy::receiver_sensitivity_dbm(6, 125e3), std::domain_error);
  CHECK_THROWS_AS(phy::receiver_sensitivity_dbm(13, 125e3), std::domain_error);
  CHECK_THROWS_AS(phy::receiver_sensitivity_dbm(7, 62.5e3), std::domain_error);
}

TEST_CASE("sinr thresholds are exact") {
  const double thr[] = {-7.5, -10, -12.5, -15, -17.5, -20};
  for (int sf = 7; sf <= 12; ++sf) CHECK(phy::sinr_threshold_db(sf) == thr[sf - 7]);
  CHECK_THROWS_AS(phy::sinr_threshold_db(6), std::domain_error);
  CHECK_THROWS_AS(phy::sinr_threshold_db(13), std::domain_error);
}

TEST_CASE("payload symbols for the reference packet") {
  const RadioConstants c;
  CHECK(phy::payload_symbols(50, 7, c) == 83);
  CHECK(phy::payload_symbols(50, 12, c) == 53);
}

TEST_CASE("payload symbols clamp at eight") {
  RadioConstants c;
  c.crc = false;
  c.implicit_header = true;
  // 8 - 48 + 28 - 20 < 0 for a one-byte implicit-header SF12 frame
  CHECK(phy::payload_symbols(1, 12, c) == 8);
  CHECK(phy::payload_symbols(2, 12, c) == 8);
}

TEST_CASE("payload symbols match the oracle across the parameter grid") {
  for (int cr = 1; cr <= 4; ++cr) {
    for (int flags = 0; flags < 8; ++flags) {
      RadioConstants c;
      c.coding_rate = cr;
      c.crc = flags & 1;
      c.implicit_header = flags & 2;
      c.low_dr_opt = flags & 4;
      for (int sf = 7; sf <= 12; ++sf) {
        for (int ps = 1; ps <= 255; ps += 7) {
          const int n = phy::payload_symbols(ps, sf, c);
          REQUIRE(n == AirtimeOracle::symbols(ps, sf, cr, c.crc, c.implicit_header, c.low_dr_opt));
          CHECK(n >= 8);
          if (n > 8) CHECK((n - 8) % (cr + 4) == 0);
        }
      }
    }
  }
}

TEST_CASE("time on air of the reference packet") {
  const RadioConstants c;
  CHECK(phy::time_on_air_s(50, 7, c) == doctest::Approx(0.097536).epsilon(1e-12));
  CHECK(phy::time_on_air_s(50, 12, c) == doctest::Approx(2.138112).epsilon(1e-12));
  for (int sf = 7; sf <= 12; ++sf) {
    for (int ps = 1; ps <= 255; ps += 11) {
      CHECK(phy::time_on_air_s(ps, sf, c) * 1e6 ==
            doctest::Approx(AirtimeOracle::toa_us(ps, sf)).epsilon(1e-12));
    }
  }
}

TEST_CASE("time on air orderings") {
  const RadioConstants c;
  for (int ps = 1; ps <= 255; ++ps) {
    for (int sf = 7; sf < 12; ++sf) {
      CHECK(phy::time_on_air_s(ps, sf + 1, c) > phy::time_on_air_s(ps, sf, c));
    }
  }
  for (int sf = 7; sf <= 12; ++sf) {
    const double preamble = (c.preamble_symbols + 4.25) * phy::symbol_time_s(sf, c.bandwidth_hz);
    for (int ps = 1; ps < 255; ++ps) {
      CHECK(phy::time_on_air_s(ps + 1, sf, c) >= phy::time_on_air_s(ps, sf, c));
      CHECK(phy::time_on_air_s(ps, sf, c) > preamble);
    }
  }
}

TEST_CASE("energy conventions") {
  const double toa = 0.097536;
  CHECK(phy::tx_energy_mj(14, toa, EnergyConvention::PhysicalMilliwatt) ==
        doctest::Approx(2.450).epsilon(1e-3));
  CHECK(phy::tx_energy_mj(2, toa, EnergyConvention::PhysicalMilliwatt) ==
        doctest::Approx(0.1546).epsilon(1e-3));
  CHECK(phy::tx_energy_mj(14, toa, EnergyConvention::PaperLiteral) ==
        doctest::Approx(1.3655).epsilon(1e-4));
  double last = 0.0;
  for (int tp = 2; tp <= 14; tp += 2) {
    const double e = phy::tx_energy_mj(tp, toa, EnergyConvention::PhysicalMilliwatt);
    CHECK(e > last);
    CHECK(phy::tx_energy_mj(tp, 2 * toa, EnergyConvention::PhysicalMilliwatt) > e);
    last = e;
  }
}

TEST_CASE("sinr in the linear domain") {
  const std::vector<double> none;
  CHECK(phy::sinr_db(-110, none, -120) == doctest::Approx(10.0).epsilon(1e-12));
  const std::vector<double> one{-110};
  CHECK(phy::sinr_db(-110, one, -std::numeric_limits<double>::infinity()) ==
        doctest::Approx(0.0));
  const std::vector<double> two{-113, -113};
  const double expected =
      10.0 * std::log10(1e-11 / (2.0 * std::pow(10.0, -11.3) + 1e-12));
  CHECK(phy::sinr_db(-110, two, -120) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-0.4233).epsilon(1e-3));
  for (double s = -140; s < -60; s += 3.3) {
    for (double n = -130; n < -100; n += 4.1) {
      CHECK(std::abs(phy::sinr_db(s, none, n) - (s - n)) < 1e-9);
    }
  }
}

TEST_CASE("thermal noise floor") {
  const RadioConstants c;
  CHECK(phy::thermal_noise_dbm(c) == doctest::Approx(-174.0 + 10.0 * std::log10(125e3) + 6.0));
}

TEST_CASE("parameter validation") {
  PathLossParams p;
  p.ref_distance_m = 0.0;
  CHECK_THROWS(p.validate());
  p = {};
  p.shadow_sigma_db = -1.0;
  CHECK_THROWS(p.validate());
  RadioConstants c;
  c.coding_rate = 5;
  CHECK_THROWS(c.validate());
  ActionSets s;
  s.sfs = {7, 6};
  CHECK_THROWS(s.validate());
  s = {};
  s.tps_dbm.clear();
  CHECK_THROWS(s.validate());
  s = {};
  CHECK(s.super_arm_count() == 336);
  CHECK(s.contains({7, 12, 14}));
  CHECK_FALSE(s.contains({8, 12, 14}));
  CHECK_FALSE(s.contains({0, 12, 13}));
}
