/* Minimal Unity-compatible test harness: the assertion-macro subset the
 * generated tests rely on, with the standard output shape
 * ("file:line:test:FAIL: ..." lines, "N Tests M Failures" summary). */
#ifndef UNITY_H
#define UNITY_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

void setUp(void);
void tearDown(void);

void UnityBegin(const char* file);
int UnityEnd(void);
void UnityRunTest(void (*func)(void), const char* name, int line);

void UnityAssertCondition(int cond, const char* expr, const char* msg,
                          const char* file, int line);
void UnityAssertEqualInt(long long expected, long long actual, const char* msg,
                         const char* file, int line);
void UnityAssertNotEqualInt(long long unexpected, long long actual,
                            const char* msg, const char* file, int line);
void UnityAssertEqualUint(unsigned long long expected,
                          unsigned long long actual, const char* msg,
                          const char* file, int line);
void UnityAssertEqualPtr(const void* expected, const void* actual,
                         const char* msg, const char* file, int line);
void UnityAssertNull(const void* ptr, int expect_null, const char* msg,
                     const char* file, int line);
void UnityAssertEqualString(const char* expected, const char* actual,
                            const char* msg, const char* file, int line);
void UnityAssertEqualMemory(const void* expected, const void* actual,
                            size_t len, const char* msg, const char* file,
                            int line);
void UnityAssertDoubleWithin(double delta, double expected, double actual,
                             const char* msg, const char* file, int line);
void UnityAssertOrder(int op, long long threshold, long long actual,
                      const char* msg, const char* file, int line);
void UnityFail(const char* msg, const char* file, int line);
void UnityIgnore(const char* msg, const char* file, int line);
void UnityPassNow(void);
void UnityMessage(const char* msg);

#define UNITY_BEGIN() UnityBegin(__FILE__)
#define UNITY_END() UnityEnd()
#define RUN_TEST(func) UnityRunTest(func, #func, __LINE__)

#define TEST_ASSERT(cond) \
  UnityAssertCondition((cond) != 0, #cond, NULL, __FILE__, __LINE__)
#define TEST_ASSERT_MESSAGE(cond, msg) \
  UnityAssertCondition((cond) != 0, #cond, (msg), __FILE__, __LINE__)
#define TEST_ASSERT_TRUE(cond) TEST_ASSERT(cond)
#define TEST_ASSERT_TRUE_MESSAGE(cond, msg) TEST_ASSERT_MESSAGE(cond, msg)
#define TEST_ASSERT_FALSE(cond) \
  UnityAssertCondition(!(cond), "!(" #cond ")", NULL, __FILE__, __LINE__)
#define TEST_ASSERT_FALSE_MESSAGE(cond, msg) \
  UnityAssertCondition(!(cond), "!(" #cond ")", (msg), __FILE__, __LINE__)

#define TEST_ASSERT_NULL(ptr) \
  UnityAssertNull((const void*)(ptr), 1, NULL, __FILE__, __LINE__)
#define TEST_ASSERT_NULL_MESSAGE(ptr, msg) \
  UnityAssertNull((const void*)(ptr), 1, (msg), __FILE__, __LINE__)
#define TEST_ASSERT_NOT_NULL(ptr) \
  UnityAssertNull((const void*)(ptr), 0, NULL, __FILE__, __LINE__)
#define TEST_ASSERT_NOT_NULL_MESSAGE(ptr, msg) \
  UnityAssertNull((const void*)(ptr), 0, (msg), __FILE__, __LINE__)

#define TEST_ASSERT_EQUAL_INT(expected, actual)                            \
  UnityAssertEqualInt((long long)(expected), (long long)(actual), NULL, \
                      __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL_INT_MESSAGE(expected, actual, msg)               \
  UnityAssertEqualInt((long long)(expected), (long long)(actual), (msg), \
                      __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL(expected, actual) \
  TEST_ASSERT_EQUAL_INT(expected, actual)
#define TEST_ASSERT_EQUAL_MESSAGE(expected, actual, msg) \
  TEST_ASSERT_EQUAL_INT_MESSAGE(expected, actual, msg)
#define TEST_ASSERT_EQUAL_CHAR(expected, actual) \
  TEST_ASSERT_EQUAL_INT(expected, actual)
#define TEST_ASSERT_EQUAL_INT8(expected, actual) \
  TEST_ASSERT_EQUAL_INT(expected, actual)
#define TEST_ASSERT_EQUAL_INT16(expected, actual) \
  TEST_ASSERT_EQUAL_INT(expected, actual)
#define TEST_ASSERT_EQUAL_INT32(expected, actual) \
  TEST_ASSERT_EQUAL_INT(expected, actual)
#define TEST_ASSERT_EQUAL_INT64(expected, actual) \
  TEST_ASSERT_EQUAL_INT(expected, actual)
#define TEST_ASSERT_NOT_EQUAL(unexpected, actual)                        \
  UnityAssertNotEqualInt((long long)(unexpected), (long long)(actual), \
                         NULL, __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL_UINT(expected, actual)                       \
  UnityAssertEqualUint((unsigned long long)(expected),                 \
                       (unsigned long long)(actual), NULL, __FILE__, \
                       __LINE__)
#define TEST_ASSERT_EQUAL_UINT8(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)
#define TEST_ASSERT_EQUAL_UINT16(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)
#define TEST_ASSERT_EQUAL_UINT32(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)
#define TEST_ASSERT_EQUAL_UINT64(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)
#define TEST_ASSERT_EQUAL_SIZE_T(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)
#define TEST_ASSERT_EQUAL_HEX(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)
#define TEST_ASSERT_EQUAL_HEX32(expected, actual) \
  TEST_ASSERT_EQUAL_UINT(expected, actual)

#define TEST_ASSERT_EQUAL_PTR(expected, actual)                          \
  UnityAssertEqualPtr((const void*)(expected), (const void*)(actual), \
                      NULL, __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL_STRING(expected, actual) \
  UnityAssertEqualString((expected), (actual), NULL, __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL_STRING_MESSAGE(expected, actual, msg) \
  UnityAssertEqualString((expected), (actual), (msg), __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL_MEMORY(expected, actual, len)                     \
  UnityAssertEqualMemory((const void*)(expected), (const void*)(actual), \
                         (size_t)(len), NULL, __FILE__, __LINE__)

#define TEST_ASSERT_EQUAL_FLOAT(expected, actual)                       \
  UnityAssertDoubleWithin(1e-5 * ((expected) < 0 ? -(double)(expected)  \
                                                 : (double)(expected)) + \
                              1e-7,                                      \
                          (double)(expected), (double)(actual), NULL,    \
                          __FILE__, __LINE__)
#define TEST_ASSERT_EQUAL_DOUBLE(expected, actual)                       \
  UnityAssertDoubleWithin(1e-12 * ((expected) < 0 ? -(double)(expected) \
                                                  : (double)(expected)) + \
                              1e-12,                                     \
                          (double)(expected), (double)(actual), NULL,    \
                          __FILE__, __LINE__)
#define TEST_ASSERT_FLOAT_WITHIN(delta, expected, actual)               \
  UnityAssertDoubleWithin((double)(delta), (double)(expected),          \
                          (double)(actual), NULL, __FILE__, __LINE__)
#define TEST_ASSERT_DOUBLE_WITHIN(delta, expected, actual)              \
  UnityAssertDoubleWithin((double)(delta), (double)(expected),          \
                          (double)(actual), NULL, __FILE__, __LINE__)
#define TEST_ASSERT_INT_WITHIN(delta, expected, actual)                  \
  UnityAssertDoubleWithin((double)(delta), (double)(expected),           \
                          (double)(actual), NULL, __FILE__, __LINE__)

#define TEST_ASSERT_GREATER_THAN(threshold, actual)                       \
  UnityAssertOrder(0, (long long)(threshold), (long long)(actual), NULL, \
                   __FILE__, __LINE__)
#define TEST_ASSERT_LESS_THAN(threshold, actual)                          \
  UnityAssertOrder(1, (long long)(threshold), (long long)(actual), NULL, \
                   __FILE__, __LINE__)
#define TEST_ASSERT_GREATER_OR_EQUAL(threshold, actual)                   \
  UnityAssertOrder(2, (long long)(threshold), (long long)(actual), NULL, \
                   __FILE__, __LINE__)
#define TEST_ASSERT_LESS_OR_EQUAL(threshold, actual)                      \
  UnityAssertOrder(3, (long long)(threshold), (long long)(actual), NULL, \
                   __FILE__, __LINE__)

#define TEST_FAIL() UnityFail("test failed", __FILE__, __LINE__)
#define TEST_FAIL_MESSAGE(msg) UnityFail((msg), __FILE__, __LINE__)
#define TEST_PASS() UnityPassNow()
#define TEST_IGNORE() UnityIgnore(NULL, __FILE__, __LINE__)
#define TEST_IGNORE_MESSAGE(msg) UnityIgnore((msg), __FILE__, __LINE__)
#define TEST_MESSAGE(msg) UnityMessage(msg)
#define TEST_ABORT() UnityFail("aborted", __FILE__, __LINE__)

#ifdef __cplusplus
}
#endif

#endif /* UNITY_H */
