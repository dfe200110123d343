#pragma once

#include <cstdint>
#include <string>

#include "pwc/net.hpp"

namespace pwc {

// CRC-32 (IEEE 802.3 polynomial, reflected), as used for the checkpoint
// trailer.
std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

// Binary model file, fixed little-endian layout:
//   magic "PWC1" | u32 version=1 | u32 layer count
//   per layer: u8 tag {0=pointconv, 1=relu, 2=pool, 3=dense}
//     pointconv: f32 radius, u8 resolution, u8 geometry {0=ball, 1=cube},
//                u32 c_in, u32 c_out, f32 weights [c_out][c_in][cells],
//                f32 bias [c_out]
//     dense:     u32 c_in, u32 c_out, f32 weights row-major [c_out][c_in],
//                f32 bias [c_out]
//   u32 CRC-32 of all preceding bytes
// Parameters are stored as f32; an f64 state is narrowed on save.
template <class T>
void save_checkpoint(const NetworkSpec& spec, const ModelState<T>& state, const std::string& path);

struct LoadedModel {
  NetworkSpec spec;       // task/channels/classes reconstructed from the layers
  ModelState<float> state;
};

LoadedModel load_checkpoint(const std::string& path);

template <class T>
ModelState<T> convert_state(const ModelState<float>& state);

}  // namespace pwc
