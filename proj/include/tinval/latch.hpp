#pragma once

#include <pthread.h>

namespace tinval {

/// Reader/writer latch that prefers waiting writers, so structural changes
/// (splits, merges) are not starved by a steady stream of readers. Satisfies
/// the SharedMutex requirements used by std::shared_lock / std::unique_lock.
class RwLatch {
 public:
  RwLatch();
  ~RwLatch();
  RwLatch(const RwLatch&) = delete;
  RwLatch& operator=(const RwLatch&) = delete;

  void lock() { pthread_rwlock_wrlock(&rw_); }
  bool try_lock() { return pthread_rwlock_trywrlock(&rw_) == 0; }
  void unlock() { pthread_rwlock_unlock(&rw_); }
  void lock_shared() { pthread_rwlock_rdlock(&rw_); }
  bool try_lock_shared() { return pthread_rwlock_tryrdlock(&rw_) == 0; }
  void unlock_shared() { pthread_rwlock_unlock(&rw_); }

 private:
  pthread_rwlock_t rw_;
};

}  // namespace tinval
