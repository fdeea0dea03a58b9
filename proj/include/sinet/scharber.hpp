#pragma once

// Scharber-style device model: maps donor HOMO / acceptor LUMO levels to an
// open-circuit voltage and a power conversion efficiency.
//
//   Voc [V]  = (E_HOMO_donor - E_LUMO_acceptor) - 0.3
//   PCE [%]  = 100 * (Voc * FF * Jsc) / Pin
//
// Energies are taken literally (signed, eV); a negative Voc simply yields a
// negative PCE.  Some tabulations instead use |E_HOMO| - |E_LUMO| - 0.3; that
// magnitude convention is provided separately and labeled as such.

#include <cmath>

#include "sinet/data_io.hpp"
#include "sinet/errors.hpp"

namespace sinet {

struct ScharberInputs {
  double e_homo_donor_ev = 0.0;
  double e_lumo_acceptor_ev = 0.0;
  double fill_factor = 0.65;      // dimensionless, (0, 1]
  double j_sc_ma_cm2 = 15.0;      // short-circuit current density [mA/cm^2]
  double p_in_mw_cm2 = 100.0;     // incident power [mW/cm^2]

  void validate() const {
    if (!std::isfinite(e_homo_donor_ev) || !std::isfinite(e_lumo_acceptor_ev))
      throw NumericError("ScharberInputs: energy levels must be finite");
    if (!(fill_factor > 0.0) || fill_factor > 1.0 || !std::isfinite(fill_factor))
      throw NumericError("ScharberInputs: fill factor must be in (0, 1], got " +
                         detail::format_double(fill_factor));
    if (!(j_sc_ma_cm2 >= 0.0) || !std::isfinite(j_sc_ma_cm2))
      throw NumericError("ScharberInputs: short-circuit current must be non-negative, got " +
                         detail::format_double(j_sc_ma_cm2));
    if (!(p_in_mw_cm2 > 0.0) || !std::isfinite(p_in_mw_cm2))
      throw NumericError("ScharberInputs: incident power must be positive, got " +
                         detail::format_double(p_in_mw_cm2));
  }
};

inline double open_circuit_voltage(double e_homo_donor_ev, double e_lumo_acceptor_ev) {
  if (!std::isfinite(e_homo_donor_ev) || !std::isfinite(e_lumo_acceptor_ev))
    throw NumericError("open_circuit_voltage: energy levels must be finite");
  return (e_homo_donor_ev - e_lumo_acceptor_ev) - 0.3;
}

// Magnitude convention used by some tables; NOT the published formula above.
inline double open_circuit_voltage_magnitude(double e_homo_donor_ev, double e_lumo_acceptor_ev) {
  if (!std::isfinite(e_homo_donor_ev) || !std::isfinite(e_lumo_acceptor_ev))
    throw NumericError("open_circuit_voltage_magnitude: energy levels must be finite");
  return std::abs(e_homo_donor_ev) - std::abs(e_lumo_acceptor_ev) - 0.3;
}

inline double power_conversion_efficiency(double voc_v, double fill_factor, double j_sc_ma_cm2,
                                          double p_in_mw_cm2) {
  if (!std::isfinite(voc_v)) throw NumericError("power_conversion_efficiency: non-finite Voc");
  if (!(p_in_mw_cm2 > 0.0) || !std::isfinite(p_in_mw_cm2))
    throw NumericError("power_conversion_efficiency: incident power must be positive, got " +
                       detail::format_double(p_in_mw_cm2));
  return 100.0 * (voc_v * fill_factor * j_sc_ma_cm2) / p_in_mw_cm2;
}

inline double power_conversion_efficiency(double voc_v, const ScharberInputs& in) {
  in.validate();
  return power_conversion_efficiency(voc_v, in.fill_factor, in.j_sc_ma_cm2, in.p_in_mw_cm2);
}

struct ScharberResult {
  double voc_v = 0.0;
  double pce_percent = 0.0;
};

inline ScharberResult scharber_pce(const ScharberInputs& in) {
  in.validate();
  ScharberResult r;
  r.voc_v = open_circuit_voltage(in.e_homo_donor_ev, in.e_lumo_acceptor_ev);
  r.pce_percent = power_conversion_efficiency(r.voc_v, in);
  return r;
}

inline ScharberResult scharber_pce_magnitude(const ScharberInputs& in) {
  in.validate();
  ScharberResult r;
  r.voc_v = open_circuit_voltage_magnitude(in.e_homo_donor_ev, in.e_lumo_acceptor_ev);
  r.pce_percent = power_conversion_efficiency(r.voc_v, in);
  return r;
}

}  // namespace sinet
