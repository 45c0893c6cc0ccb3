#include "orbitledger/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace orbitledger {

struct Sha256::Context
{
  EVP_MD_CTX *md{EVP_MD_CTX_new()};

  Context()
  {
    if (md == nullptr || EVP_DigestInit_ex(md, EVP_sha256(), nullptr) != 1)
    {
      EVP_MD_CTX_free(md);
      throw std::runtime_error("sha256: digest init failed");
    }
  }

  Context(Context const &other)
  {
    if (md == nullptr || EVP_MD_CTX_copy_ex(md, other.md) != 1)
    {
      EVP_MD_CTX_free(md);
      throw std::runtime_error("sha256: context copy failed");
    }
  }

  Context &operator=(Context const &) = delete;

  ~Context()
  {
    EVP_MD_CTX_free(md);
  }
};

Sha256::Sha256()
  : ctx_{std::make_unique<Context>()}
{}

Sha256::Sha256(Sha256 const &other)
  : ctx_{std::make_unique<Context>(*other.ctx_)}
{}

Sha256 &Sha256::operator=(Sha256 const &other)
{
  if (this != &other)
  {
    ctx_ = std::make_unique<Context>(*other.ctx_);
  }
  return *this;
}

Sha256::Sha256(Sha256 &&) noexcept = default;
Sha256 &Sha256::operator=(Sha256 &&) noexcept = default;
Sha256::~Sha256()                              = default;

Sha256 &Sha256::update(std::span<std::uint8_t const> data)
{
  if (EVP_DigestUpdate(ctx_->md, data.data(), data.size()) != 1)
  {
    throw std::runtime_error("sha256: update failed");
  }
  return *this;
}

Digest Sha256::finish()
{
  Digest       out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx_->md, out.data(), &len) != 1 || len != out.size())
  {
    throw std::runtime_error("sha256: final failed");
  }
  return out;
}

Digest sha256(std::span<std::uint8_t const> data)
{
  return Sha256{}.update(data).finish();
}

}  // namespace orbitledger
