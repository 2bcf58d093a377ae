#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crystclr/dataset.hpp"

namespace crystclr {

/// Desk-scale stand-in corpus: small prototype crystals (rocksalt, CsCl,
/// zincblende, fluorite, perovskite, wurtzite, bcc, fcc) with elements drawn
/// from chemically sensible columns and jittered lattice constants.
/// Targets are a fixed linear function of the composition fractions
/// (see composition_target).
Dataset synthetic_corpus(std::size_t count, std::uint64_t seed, const std::string& id_prefix = "syn");

/// sum_Z x_Z * w_Z, where x_Z is the atomic fraction of element Z and the
/// per-element weights w_Z are fixed.
double composition_target(const CrystalStructure& s);

/// Writes one JSON file per sample plus "manifest.txt" (path and target per
/// line) into directory; returns the manifest path.
std::string write_corpus(const Dataset& data, const std::string& directory);

}  // namespace crystclr
