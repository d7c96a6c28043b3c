#include "unity.h"

#include <math.h>
#include <setjmp.h>
#include <stdio.h>
#include <string.h>

static const char* unity_suite_file = "";
static const char* unity_test_name = "";
static int unity_test_line = 0;
static int unity_tests = 0;
static int unity_failures = 0;
static int unity_ignored = 0;
static int unity_current_failed = 0;
static int unity_current_ignored = 0;
static jmp_buf unity_abort_jmp;
static int unity_jump_armed = 0;

/* Tests may omit fixtures; the runner always calls them. */
__attribute__((weak)) void setUp(void) {}
__attribute__((weak)) void tearDown(void) {}

static void unity_abort(int code) {
    if (unity_jump_armed) longjmp(unity_abort_jmp, code);
}

void UnityBegin(const char* file) {
    unity_suite_file = file;
    unity_tests = 0;
    unity_failures = 0;
    unity_ignored = 0;
}

int UnityEnd(void) {
    printf("\n-----------------------\n");
    printf("%d Tests %d Failures %d Ignored\n", unity_tests, unity_failures,
           unity_ignored);
    printf("%s\n", unity_failures ? "FAIL" : "OK");
    fflush(stdout);
    return unity_failures;
}

void UnityRunTest(void (*func)(void), const char* name, int line) {
    unity_test_name = name;
    unity_test_line = line;
    unity_current_failed = 0;
    unity_current_ignored = 0;
    unity_tests++;
    setUp();
    if (setjmp(unity_abort_jmp) == 0) {
        unity_jump_armed = 1;
        func();
    }
    unity_jump_armed = 0;
    tearDown();
    if (unity_current_failed) {
        unity_failures++;
    } else if (unity_current_ignored) {
        unity_ignored++;
    } else {
        printf("%s:%d:%s:PASS\n", unity_suite_file, line, name);
        fflush(stdout);
    }
}

static void unity_print_fail(const char* file, int line, const char* detail,
                             const char* msg) {
    printf("%s:%d:%s:FAIL: %s", file, line, unity_test_name, detail);
    if (msg) printf(" (%s)", msg);
    printf("\n");
    fflush(stdout);
    unity_current_failed = 1;
    unity_abort(1);
}

void UnityAssertCondition(int cond, const char* expr, const char* msg,
                          const char* file, int line) {
    if (cond) return;
    char detail[512];
    snprintf(detail, sizeof(detail), "Expression Evaluated To FALSE: %s", expr);
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertEqualInt(long long expected, long long actual, const char* msg,
                         const char* file, int line) {
    if (expected == actual) return;
    char detail[128];
    snprintf(detail, sizeof(detail), "Expected %lld Was %lld", expected, actual);
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertNotEqualInt(long long unexpected, long long actual,
                            const char* msg, const char* file, int line) {
    if (unexpected != actual) return;
    char detail[128];
    snprintf(detail, sizeof(detail), "Expected Not-Equal, Both %lld", actual);
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertEqualUint(unsigned long long expected,
                          unsigned long long actual, const char* msg,
                          const char* file, int line) {
    if (expected == actual) return;
    char detail[128];
    snprintf(detail, sizeof(detail), "Expected %llu Was %llu", expected,
             actual);
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertEqualPtr(const void* expected, const void* actual,
                         const char* msg, const char* file, int line) {
    if (expected == actual) return;
    char detail[128];
    snprintf(detail, sizeof(detail), "Expected %p Was %p", expected, actual);
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertNull(const void* ptr, int expect_null, const char* msg,
                     const char* file, int line) {
    if (expect_null ? ptr == NULL : ptr != NULL) return;
    unity_print_fail(file, line,
                     expect_null ? "Expected NULL" : "Expected Non-NULL", msg);
}

void UnityAssertEqualString(const char* expected, const char* actual,
                            const char* msg, const char* file, int line) {
    if (expected == NULL && actual == NULL) return;
    if (expected != NULL && actual != NULL && strcmp(expected, actual) == 0)
        return;
    char detail[512];
    snprintf(detail, sizeof(detail), "Expected '%s' Was '%s'",
             expected ? expected : "(null)", actual ? actual : "(null)");
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertEqualMemory(const void* expected, const void* actual,
                            size_t len, const char* msg, const char* file,
                            int line) {
    if (len == 0) return;
    if (expected != NULL && actual != NULL &&
        memcmp(expected, actual, len) == 0)
        return;
    unity_print_fail(file, line, "Memory Mismatch", msg);
}

void UnityAssertDoubleWithin(double delta, double expected, double actual,
                             const char* msg, const char* file, int line) {
    if (fabs(expected - actual) <= fabs(delta)) return;
    char detail[160];
    snprintf(detail, sizeof(detail), "Expected %g Was %g (delta %g)", expected,
             actual, delta);
    unity_print_fail(file, line, detail, msg);
}

void UnityAssertOrder(int op, long long threshold, long long actual,
                      const char* msg, const char* file, int line) {
    static const char* kName[] = {">", "<", ">=", "<="};
    int ok = 0;
    switch (op) {
        case 0: ok = actual > threshold; break;
        case 1: ok = actual < threshold; break;
        case 2: ok = actual >= threshold; break;
        case 3: ok = actual <= threshold; break;
        default: break;
    }
    if (ok) return;
    char detail[160];
    snprintf(detail, sizeof(detail), "Expected %lld %s %lld", actual,
             kName[op & 3], threshold);
    unity_print_fail(file, line, detail, msg);
}

void UnityFail(const char* msg, const char* file, int line) {
    unity_print_fail(file, line, msg ? msg : "test failed", NULL);
}

void UnityIgnore(const char* msg, const char* file, int line) {
    printf("%s:%d:%s:IGNORE", file, line, unity_test_name);
    if (msg) printf(": %s", msg);
    printf("\n");
    fflush(stdout);
    unity_current_ignored = 1;
    unity_abort(3);
}

void UnityPassNow(void) { unity_abort(2); }

void UnityMessage(const char* msg) {
    printf("%s:%d:%s:INFO: %s\n", unity_suite_file, unity_test_line,
           unity_test_name, msg ? msg : "");
    fflush(stdout);
}
