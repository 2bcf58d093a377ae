#include "crystclr/periodic_table.hpp"

#include <array>
#include <string>

#include "crystclr/errors.hpp"

namespace crystclr {
namespace {

constexpr std::array<std::string_view, kMaxAtomicNumber> kSymbols = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
    "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh",
    "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re",
    "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm"};

constexpr int kFirstFBlockColumn = 19;

// Group and period from Z, with the f-block mapped to pseudo-columns.
std::pair<int, int> locate(int z) {
  if (z == 1) return {1, 1};
  if (z == 2) return {18, 1};
  auto short_period = [](int offset) { return offset < 2 ? offset + 1 : offset + 11; };
  if (z <= 10) return {short_period(z - 3), 2};
  if (z <= 18) return {short_period(z - 11), 3};
  if (z <= 36) return {z - 18, 4};
  if (z <= 54) return {z - 36, 5};
  if (z <= 56) return {z - 54, 6};
  if (z <= 71) return {kFirstFBlockColumn + (z - 57), 6};
  if (z <= 86) return {z - 68, 6};
  if (z <= 88) return {z - 86, 7};
  return {kFirstFBlockColumn + (z - 89), 7};
}

}  // namespace

const PeriodicTable& PeriodicTable::instance() {
  static const PeriodicTable table;
  return table;
}

PeriodicTable::PeriodicTable()
    : group_(kMaxAtomicNumber + 1, 0), period_(kMaxAtomicNumber + 1, 0), members_(34) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    auto [group, period] = locate(z);
    group_[z] = group;
    period_[z] = period;
    members_[group].push_back(z);
  }
}

namespace {
void check_z(int z) {
  if (z < 1 || z > kMaxAtomicNumber) {
    throw InvariantError("atomic number out of range: " + std::to_string(z));
  }
}
}  // namespace

int PeriodicTable::group_of(int z) const {
  check_z(z);
  return group_[z];
}

int PeriodicTable::period_of(int z) const {
  check_z(z);
  return period_[z];
}

std::string_view PeriodicTable::symbol(int z) const {
  check_z(z);
  return kSymbols[z - 1];
}

std::optional<int> PeriodicTable::atomic_number(std::string_view symbol) const {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    if (kSymbols[z - 1] == symbol) return z;
  }
  return std::nullopt;
}

std::span<const int> PeriodicTable::column_members(int z) const {
  return members_[group_of(z)];
}

}  // namespace crystclr
