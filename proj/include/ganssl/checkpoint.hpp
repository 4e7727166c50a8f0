#pragma once
// Checkpoint archive: fixed magic, a JSON manifest naming every tensor
// with its shape and byte offset, then raw little-endian float32 data.
// Reload is bit-exact: the bytes written are the bytes the training
// state held.

#include <string>
#include <vector>

#include "ganssl/nn.hpp"

namespace ganssl::ckpt {

// Saves the named tensors (order preserved) plus a free-form metadata
// JSON string embedded in the manifest.
void save(const std::string& path,
          const std::vector<nn::ParamRef<float>>& tensors,
          const std::string& meta_json = "{}");

// Fills each ref's value tensor from the archive by name; shapes must
// match. Tensors present in the archive but not requested are ignored.
void load(const std::string& path,
          const std::vector<nn::ParamRef<float>>& tensors,
          std::string* meta_json = nullptr);

// Names present in an archive, in stored order.
std::vector<std::string> list(const std::string& path);

}  // namespace ganssl::ckpt
