#pragma once

#include <string>

#include "kddt/param_store.hpp"

namespace kddt {

// Binary checkpoint: magic "KDDT1", then for each parameter in lexicographic
// name order: u32 name length, name bytes, u32 rank, u32 extents, raw float32
// data. All integers and floats little-endian. Round-trips bit-exactly.
void save_checkpoint(const ParameterStore& store, const std::string& path);

// Loads every parameter into a fresh store.
ParameterStore load_checkpoint(const std::string& path);

// Loads only parameters whose name starts with `prefix` into `into`,
// replacing data of same-named existing tensors (shapes must match).
void load_checkpoint_into(const std::string& path, ParameterStore& into);

}  // namespace kddt
