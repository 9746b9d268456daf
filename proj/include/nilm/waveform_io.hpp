#pragma once

#include <string>

#include "nilm/waveform.hpp"

namespace nilm {

// Binary waveform file, little-endian:
//   magic "CSWF", version u32, kind u8, sample_rate f64, count u64, samples f64[count]
void write_waveform(const std::string& path, const Waveform& w);
Waveform read_waveform(const std::string& path);

// CSV variant: header row "sample_rate=<hz>,kind=<current|voltage>" followed
// by one sample per line.
void write_waveform_csv(const std::string& path, const Waveform& w);
Waveform read_waveform_csv(const std::string& path);

}  // namespace nilm
