// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "grass/dataset.hpp"

namespace grass {

inline constexpr std::size_t kMoleculeAtomTypes = 28;
inline constexpr std::size_t kMoleculeBondTypes = 4;

/// Molecule-like undirected graphs in the same layout as the ZINC export:
/// one categorical atom id per node, one categorical bond id per edge, and a
/// scalar target computed from atom/bond contributions and ring count.
/// Size statistics track ZINC (about 23 nodes and 25 bonds per graph).
Dataset synthetic_molecules(std::size_t count, std::uint64_t seed);

}  // namespace grass
