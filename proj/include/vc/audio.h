// Copyright (c) 2026 The prosody-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VC_AUDIO_H_
#define VC_AUDIO_H_

#include <string>
#include <vector>

#include "vc/common.h"

namespace vc {

struct Waveform {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 0;
};

// Reads a RIFF/WAVE file holding mono 16-bit PCM or 32-bit float samples.
Waveform ReadWav(const std::string& path);
// Writes 16-bit PCM, clipping to [-1, 1].
void WriteWav(const std::string& path, const Waveform& wav);

// Band-limited resampling with a Hann-windowed sinc kernel.
Waveform Resample(const Waveform& in, int target_rate);

struct StftConfig {
  int fft_size = 1024;
  int hop = 256;
};

// Center-padded (reflect) magnitude-squared STFT. Rows are frames,
// columns are the fft_size / 2 + 1 bins. Frame count is 1 + N / hop.
Matrix PowerSpectrogram(const std::vector<double>& samples,
                        const StftConfig& config);

// Complex STFT/ISTFT pair used by the spectrogram inversion utility.
using ComplexMatrix = Eigen::MatrixXcd;
ComplexMatrix Stft(const std::vector<double>& samples, const StftConfig& config);
std::vector<double> Istft(const ComplexMatrix& spec, const StftConfig& config,
                          size_t length);

// Slaney-scale triangular filters with area normalization, shape
// (n_mels, fft_size / 2 + 1).
Matrix MelFilterbank(int sample_rate, int fft_size, int n_mels, double fmin,
                     double fmax);

// Deterministic Griffin-Lim reconstruction from a log-power mel
// spectrogram. For listening only; the mel is the system's terminal
// representation.
std::vector<double> InvertLogMel(const Matrix& log_mel, int sample_rate,
                                 const StftConfig& stft, double fmin,
                                 double fmax, int iterations);

}  // namespace vc

#endif  // VC_AUDIO_H_
