#pragma once

// Unit system used throughout: time in ns, angular frequency in rad/ns,
// energy in ueV, temperature in mK, QCR bias voltage in units of Delta/e.
// In these units hbar and k_B are O(0.1-1), which keeps every quantity in
// the simulation within a few orders of magnitude of unity.

namespace qhe {

inline constexpr double kPi = 3.14159265358979323846;

struct PhysicalConstants {
    double hbar = 0.6582119569;          // ueV*ns
    double kB = 0.08617333262;           // ueV/mK
    double e_charge = 1.602176634e-19;   // C; bookkeeping only, voltages are in Delta/e
    double h = 2.0 * kPi * 0.6582119569; // ueV*ns, identically 2*pi*hbar
};

inline constexpr double kHbar = 0.6582119569;
inline constexpr double kBoltzmann = 0.08617333262;
inline constexpr double kPlanck = 2.0 * kPi * kHbar;

// 1 ueV/ns = 1000 eV/s; used when reporting output power.
inline constexpr double kUevPerNsToEvPerS = 1000.0;

} // namespace qhe
