#pragma once

#include <string>
#include <vector>

#include "perfcnn/masks.hpp"
#include "perfcnn/network.hpp"
#include "perfcnn/tensor.hpp"

namespace perfcnn {

// On-disk formats. All binary fields are little-endian by construction and
// values are 32-bit floats regardless of the in-memory precision, so every
// file round-trips byte-identically through write -> read -> write.
//
//   .pcnt  tensor:  magic "PCNT", version u32, X,Y,S u32, then X*Y*S f32
//           (x-major, then y, channel fastest — the Tensor3 layout).
//   .pcnw  kernel:  magic "PCNW", version u32, d,S,T u32, then d*d*S*T f32
//           in (i,j,s,t) order, t fastest. Fully-connected weights reuse it
//           with d=1, S=inputs, T=outputs.
//   .pcnm  mask:    text, header line `PCNM X Y N`, then N lines `x y`
//           (1-based, row-major order).
//
// A weights directory holds layer<i>.pcnw plus layer<i>.bias.pcnt per
// parameterized layer (1-based network layer index). A dataset directory
// holds sample_<k>.pcnt for k = 0..n-1 plus labels.txt with one integer
// class per line.

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

template <typename Real>
void save_tensor(const std::string& path, const Tensor3<Real>& tensor);
template <typename Real>
Tensor3<Real> load_tensor(const std::string& path);

template <typename Real>
void save_kernel(const std::string& path, const KernelTensor<Real>& kernel);
template <typename Real>
KernelTensor<Real> load_kernel(const std::string& path);

// The mask file stores only geometry and points; generator tag and seed are
// not part of the format, so a loaded mask reports them as defaults.
std::string serialize_mask(const PerforationMask& mask);
PerforationMask parse_mask(const std::string& text);
void save_mask(const std::string& path, const PerforationMask& mask);
PerforationMask load_mask(const std::string& path);

template <typename Real>
void save_weights(const std::string& dir, const Network<Real>& net);
template <typename Real>
void load_weights(const std::string& dir, Network<Real>& net);

template <typename Real>
void save_dataset(const std::string& dir, const Dataset<Real>& data);
template <typename Real>
Dataset<Real> load_dataset(const std::string& dir);

extern template void save_tensor(const std::string&, const Tensor3<float>&);
extern template void save_tensor(const std::string&, const Tensor3<double>&);
extern template Tensor3<float> load_tensor(const std::string&);
extern template Tensor3<double> load_tensor(const std::string&);
extern template void save_kernel(const std::string&, const KernelTensor<float>&);
extern template void save_kernel(const std::string&, const KernelTensor<double>&);
extern template KernelTensor<float> load_kernel(const std::string&);
extern template KernelTensor<double> load_kernel(const std::string&);
extern template void save_weights(const std::string&, const Network<float>&);
extern template void save_weights(const std::string&, const Network<double>&);
extern template void load_weights(const std::string&, Network<float>&);
extern template void load_weights(const std::string&, Network<double>&);
extern template void save_dataset(const std::string&, const Dataset<float>&);
extern template void save_dataset(const std::string&, const Dataset<double>&);
extern template Dataset<float> load_dataset(const std::string&);
extern template Dataset<double> load_dataset(const std::string&);

}  // namespace perfcnn
