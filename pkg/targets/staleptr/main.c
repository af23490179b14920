/* staleptr: dangling session access behind a missing state check.
 *
 * Commands: 'o' (re)opens the session buffer, 'c' closes it (frees the
 * buffer and marks the session closed), 'w' writes to the buffer.  The
 * write handler never checks the closed flag, so any 'w' after 'c'
 * touches the dead buffer.  The freed pointer is nulled on close, which
 * keeps the crash deterministic while the bug stays the missing check.
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "rcab_trace.h"

#define BUF_SZ 32

struct session {
    char *data;
    long closed;
};

int main(int argc, char **argv)
{
    static unsigned char buf[1 << 16];
    long n;
    long written = 0;
    struct session s;
    FILE *f;

    rcab_trace_init();
    TRACE_BLOCK(1);
    if (argc < 2)
        TRACE_EXIT(64);
    f = fopen(argv[1], "rb");
    if (!f)
        TRACE_EXIT(66);
    n = (long)fread(buf, 1, sizeof(buf), f);
    fclose(f);
    if (n < 1) { TRACE_BLOCK(2);
        TRACE_EXIT(65);
    }
    s.data = malloc(BUF_SZ);
    if (!s.data)
        TRACE_EXIT(70);
    memset(s.data, 0, BUF_SZ);
    s.closed = 0;
    TRACE_BLOCK(3);
    for (long i = 0; i < n; i++) { TRACE_BLOCK(4);
        unsigned char cmd = buf[i];
        if (cmd == 'o') { TRACE_BLOCK(5);
            if (s.data == NULL) { TRACE_BLOCK(6);
                s.data = malloc(BUF_SZ);
                if (!s.data)
                    TRACE_EXIT(70);
                memset(s.data, 0, BUF_SZ);
            }
            s.closed = 0;
        } else if (cmd == 'c') { TRACE_BLOCK(7);
            free(s.data);
            s.data = NULL;
            s.closed = 1;
        } else if (cmd == 'w') { TRACE_BLOCK(8); TRACE_VAL(8, s.closed); /* BUG: no closed check */
            s.data[written % BUF_SZ] = (char)cmd;
            written++;
        } else { TRACE_BLOCK(9); TRACE_VAL(9, cmd);
            /* unknown commands are ignored */
        }
    }
    TRACE_BLOCK(10); TRACE_VAL(10, written);
    free(s.data);
    TRACE_EXIT(0);
}
