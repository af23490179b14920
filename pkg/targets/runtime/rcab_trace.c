#include "rcab_trace.h"

#include <fcntl.h>
#include <signal.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

static int trace_fd = -1;
static char trace_buf[1 << 16];
static size_t trace_len = 0;

/* Everything below must stay async-signal-safe: the crash handler runs
 * it after SIGSEGV and friends.  Hence write(2) and a hand-rolled
 * integer formatter instead of stdio. */

static void flush_buf(void)
{
    size_t done = 0;
    if (trace_fd < 0)
        return;
    while (done < trace_len) {
        ssize_t n = write(trace_fd, trace_buf + done, trace_len - done);
        if (n <= 0)
            break;
        done += (size_t)n;
    }
    trace_len = 0;
}

static void put_bytes(const char *data, size_t n)
{
    if (trace_fd < 0)
        return;
    if (trace_len + n > sizeof(trace_buf))
        flush_buf();
    memcpy(trace_buf + trace_len, data, n);
    trace_len += n;
}

static size_t fmt_ll(long long value, char *out)
{
    char digits[24];
    size_t n = 0, i = 0;
    unsigned long long magnitude;
    if (value < 0) {
        out[i++] = '-';
        magnitude = (unsigned long long)(-(value + 1)) + 1;
    } else {
        magnitude = (unsigned long long)value;
    }
    do {
        digits[n++] = (char)('0' + magnitude % 10);
        magnitude /= 10;
    } while (magnitude);
    while (n)
        out[i++] = digits[--n];
    return i;
}

static void put_line(char tag, long long a, int has_b, long long b)
{
    char line[64];
    size_t n = 0;
    line[n++] = tag;
    line[n++] = ' ';
    n += fmt_ll(a, line + n);
    if (has_b) {
        line[n++] = ' ';
        n += fmt_ll(b, line + n);
    }
    line[n++] = '\n';
    put_bytes(line, n);
}

static void crash_handler(int sig)
{
    put_line('S', sig, 0, 0);
    flush_buf();
    /* SA_RESETHAND restored the default disposition; die for real now */
    raise(sig);
}

void rcab_trace_init(void)
{
    const char *path = getenv("RCAB_TRACE");
    struct sigaction sa;
    static const int fatal[] = {SIGSEGV, SIGABRT, SIGBUS, SIGFPE};
    size_t i;

    if (!path)
        return; /* tracing disabled; target still runs */
    trace_fd = open(path, O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (trace_fd < 0)
        return;
    put_bytes("RCAB1\n", 6);

    memset(&sa, 0, sizeof(sa));
    sa.sa_handler = crash_handler;
    sa.sa_flags = SA_RESETHAND;
    sigemptyset(&sa.sa_mask);
    for (i = 0; i < sizeof(fatal) / sizeof(fatal[0]); i++)
        sigaction(fatal[i], &sa, NULL);
}

void rcab_trace_block(long id)
{
    put_line('B', id, 0, 0);
}

void rcab_trace_val(long site, long long value)
{
    put_line('V', site, 1, value);
}

void rcab_trace_exit(int code)
{
    put_line('X', code, 0, 0);
    flush_buf();
    if (trace_fd >= 0)
        close(trace_fd);
    exit(code);
}
