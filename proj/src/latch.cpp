#include "tinval/latch.hpp"

namespace tinval {

RwLatch::RwLatch() {
  pthread_rwlockattr_t attr;
  pthread_rwlockattr_init(&attr);
#if defined(__GLIBC__)
  pthread_rwlockattr_setkind_np(&attr, PTHREAD_RWLOCK_PREFER_WRITER_NONRECURSIVE_NP);
#endif
  pthread_rwlock_init(&rw_, &attr);
  pthread_rwlockattr_destroy(&attr);
}

RwLatch::~RwLatch() { pthread_rwlock_destroy(&rw_); }

}  // namespace tinval
