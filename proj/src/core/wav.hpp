// RIFF/WAVE reading and writing (16-bit PCM and 32-bit IEEE float).
#pragma once

#include <string>

#include "core/types.hpp"

namespace smmsep::wav {

enum class SampleFormat { kPcm16, kFloat32 };

// Reads PCM 16/24/32-bit or IEEE float 32/64-bit files. Samples are scaled to
// [-1, 1) for integer formats.
TimeSignal Read(const std::string& path);

void Write(const std::string& path, const TimeSignal& signal,
           SampleFormat format = SampleFormat::kFloat32);

}  // namespace smmsep::wav
