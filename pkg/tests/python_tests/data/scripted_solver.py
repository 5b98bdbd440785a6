# Stand-in for an SMT solver: answers every (check-sat) with argv[1].
# argv[2], when given, is printed for (get-model).
import sys
import time

answer = sys.argv[1]
model = sys.argv[2] if len(sys.argv) > 2 else '(model)'

for line in sys.stdin:
    line = line.strip()
    if line == '(check-sat)':
        if answer == 'hang':
            time.sleep(60)
        if answer == 'crash':
            print('segmentation fault', file=sys.stderr)
            sys.exit(3)
        print(answer, flush=True)
    elif line == '(get-model)':
        print(model, flush=True)
    elif line.startswith('(get-info'):
        print('(:reason-unknown "incomplete quantifiers")', flush=True)
    elif line == '(exit)':
        break
