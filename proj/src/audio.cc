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

#include "vc/audio.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>

namespace vc {

namespace {

constexpr double kPi = std::numbers::pi;

uint32_t ReadU32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t ReadU16(const unsigned char* p) { return p[0] | (p[1] << 8); }

void PutU32(std::string* s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string* s, uint16_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>((v >> 8) & 0xff));
}

std::vector<double> HannWindow(int n) {
  // Periodic Hann, as used for STFT analysis.
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

std::vector<double> ReflectPad(const std::vector<double>& x, int pad) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(n + 2 * pad);
  for (int i = 0; i < n + 2 * pad; ++i) {
    int j = i - pad;
    // Reflect without repeating the edge sample; fold until in range.
    while (j < 0 || j >= n) {
      if (j < 0) j = -j;
      if (j >= n) j = 2 * (n - 1) - j;
      if (n == 1) j = 0;
    }
    out[i] = x[j];
  }
  return out;
}

double HzToMel(double f) {
  // Slaney: linear below 1 kHz, logarithmic above.
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (f < min_log_hz) return f / f_sp;
  return min_log_mel + std::log(f / min_log_hz) / logstep;
}

double MelToHz(double m) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (m < min_log_mel) return m * f_sp;
  return min_log_hz * std::exp(logstep * (m - min_log_mel));
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open audio file " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw ParseError(path + ": not a RIFF/WAVE file");

  size_t pos = 12;
  int format = 0, channels = 0, rate = 0, bits = 0;
  const unsigned char* payload = nullptr;
  size_t payload_size = 0;
  while (pos + 8 <= data.size()) {
    const uint32_t size = ReadU32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    const size_t avail = data.size() - (pos + 8);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw ParseError(path + ": short fmt chunk");
      format = ReadU16(body);
      channels = ReadU16(body + 2);
      rate = static_cast<int>(ReadU32(body + 4));
      bits = ReadU16(body + 14);
      if (format == 0xFFFE && size >= 26) format = ReadU16(body + 24);
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      payload = body;
      payload_size = std::min<size_t>(size, avail);
    }
    pos += 8 + size + (size & 1);
  }
  if (format == 0 || payload == nullptr)
    throw ParseError(path + ": missing fmt or data chunk");
  if (channels != 1)
    throw ValidationError(path + ": expected mono audio, found " +
                          std::to_string(channels) + " channels");
  if (rate <= 0) throw ParseError(path + ": invalid sample rate");

  Waveform wav;
  wav.sample_rate = rate;
  if (format == 1 && bits == 16) {
    const size_t n = payload_size / 2;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const auto v = static_cast<int16_t>(ReadU16(payload + 2 * i));
      wav.samples[i] = v / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const size_t n = payload_size / 4;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, payload + 4 * i, 4);
      wav.samples[i] = f;
    }
  } else {
    throw ParseError(path + ": unsupported sample format (need 16-bit PCM "
                            "or 32-bit float)");
  }
  return wav;
}

void WriteWav(const std::string& path, const Waveform& wav) {
  std::string out;
  const uint32_t n = static_cast<uint32_t>(wav.samples.size());
  out += "RIFF";
  PutU32(&out, 36 + 2 * n);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(wav.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wav.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, 2 * n);
  for (double s : wav.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(std::lround(c * 32767.0))));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Waveform Resample(const Waveform& in, int target_rate) {
  if (target_rate <= 0) throw ValidationError("target rate must be positive");
  if (in.sample_rate == target_rate || in.samples.empty()) {
    Waveform out = in;
    out.sample_rate = target_rate;
    return out;
  }
  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to input Nyquist
  const int half_taps = 32;
  const double support = half_taps / cutoff;
  const size_t n_out = static_cast<size_t>(
      std::floor(static_cast<double>(in.samples.size()) * ratio));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const auto n_in = static_cast<long>(in.samples.size());
  for (size_t i = 0; i < n_out; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const long lo = static_cast<long>(std::ceil(t - support));
    const long hi = static_cast<long>(std::floor(t + support));
    double acc = 0.0;
    for (long j = std::max(lo, 0L); j <= std::min(hi, n_in - 1); ++j) {
      const double x = (t - static_cast<double>(j)) * cutoff;
      const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      const double w = 0.5 + 0.5 * std::cos(kPi * (t - j) / support);
      acc += in.samples[j] * cutoff * sinc * w;
    }
    out.samples[i] = acc;
  }
  return out;
}

ComplexMatrix Stft(const std::vector<double>& samples, const StftConfig& config) {
  const int n_fft = config.fft_size;
  if (static_cast<int>(samples.size()) < n_fft)
    throw ValidationError("waveform shorter than one analysis window (" +
                          std::to_string(samples.size()) + " < " +
                          std::to_string(n_fft) + " samples)");
  const std::vector<double> padded = ReflectPad(samples, n_fft / 2);
  const int frames = 1 + static_cast<int>(samples.size()) / config.hop;
  const int bins = n_fft / 2 + 1;
  const std::vector<double> window = HannWindow(n_fft);
  ComplexMatrix spec(frames, bins);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> buf(n_fft), out;
  for (int t = 0; t < frames; ++t) {
    const size_t start = static_cast<size_t>(t) * config.hop;
    for (int i = 0; i < n_fft; ++i) buf[i] = padded[start + i] * window[i];
    fft.fwd(out, buf);
    for (int k = 0; k < bins; ++k) spec(t, k) = out[k];
  }
  return spec;
}

Matrix PowerSpectrogram(const std::vector<double>& samples,
                        const StftConfig& config) {
  return Stft(samples, config).cwiseAbs2();
}

std::vector<double> Istft(const ComplexMatrix& spec, const StftConfig& config,
                          size_t length) {
  const int n_fft = config.fft_size;
  const int frames = static_cast<int>(spec.rows());
  const int pad = n_fft / 2;
  const size_t total = static_cast<size_t>(frames - 1) * config.hop + n_fft;
  std::vector<double> acc(total, 0.0), norm(total, 0.0);
  const std::vector<double> window = HannWindow(n_fft);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> full(n_fft), out;
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k <= n_fft / 2; ++k) full[k] = spec(t, k);
    for (int k = n_fft / 2 + 1; k < n_fft; ++k) full[k] = std::conj(spec(t, n_fft - k));
    fft.inv(out, full);
    const size_t start = static_cast<size_t>(t) * config.hop;
    for (int i = 0; i < n_fft; ++i) {
      acc[start + i] += out[i].real() * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> y(length, 0.0);
  for (size_t i = 0; i < length && i + pad < total; ++i) {
    const double w = norm[i + pad];
    y[i] = w > 1e-8 ? acc[i + pad] / w : 0.0;
  }
  return y;
}

Matrix MelFilterbank(int sample_rate, int fft_size, int n_mels, double fmin,
                     double fmax) {
  if (n_mels < 1) throw ValidationError("n_mels must be >= 1");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0 + 1e-9))
    throw ValidationError("mel band edges must satisfy 0 <= fmin < fmax <= sr/2");
  const int bins = fft_size / 2 + 1;
  std::vector<double> fft_freqs(bins);
  for (int k = 0; k < bins; ++k)
    fft_freqs[k] = static_cast<double>(k) * sample_rate / fft_size;
  const double mel_lo = HzToMel(fmin), mel_hi = HzToMel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  Matrix fb = Matrix::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double up = (fft_freqs[k] - lo) / (center - lo);
      const double down = (hi - fft_freqs[k]) / (hi - center);
      fb(m, k) = std::max(0.0, std::min(up, down)) * enorm;
    }
  }
  return fb;
}

std::vector<double> InvertLogMel(const Matrix& log_mel, int sample_rate,
                                 const StftConfig& stft, double fmin,
                                 double fmax, int iterations) {
  const int n_mels = static_cast<int>(log_mel.cols());
  const Matrix fb = MelFilterbank(sample_rate, stft.fft_size, n_mels, fmin, fmax);
  // Least-squares power spectrum, clamped non-negative.
  const Matrix pinv = fb.completeOrthogonalDecomposition().pseudoInverse();
  Matrix power = (log_mel.array().exp().matrix() * pinv.transpose()).cwiseMax(0.0);
  const Matrix magnitude = power.cwiseSqrt();
  const int frames = static_cast<int>(log_mel.rows());
  const size_t length = static_cast<size_t>(frames - 1) * stft.hop;
  if (length < static_cast<size_t>(stft.fft_size))
    return std::vector<double>(length, 0.0);

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  ComplexMatrix spec(magnitude.rows(), magnitude.cols());
  for (Eigen::Index i = 0; i < magnitude.size(); ++i)
    spec(i) = std::polar(magnitude(i), uni(rng));
  std::vector<double> y = Istft(spec, stft, length);
  for (int it = 0; it < iterations; ++it) {
    ComplexMatrix est = Stft(y, stft);
    const Eigen::Index rows = std::min(est.rows(), magnitude.rows());
    for (Eigen::Index t = 0; t < rows; ++t) {
      for (Eigen::Index k = 0; k < magnitude.cols(); ++k) {
        const double a = std::abs(est(t, k));
        spec(t, k) = a > 1e-12 ? est(t, k) / a * magnitude(t, k)
                               : std::complex<double>(magnitude(t, k), 0.0);
      }
    }
    y = Istft(spec, stft, length);
  }
  return y;
}

}  // namespace vc
