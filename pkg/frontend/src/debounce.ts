/** Single-flight guard: while one invocation is pending, further calls
 * are ignored (returning null) instead of firing duplicate requests —
 * a double-clicked answer button must produce exactly one POST. */

export function singleFlight<A extends unknown[], R>(
  fn: (...args: A) => Promise<R>,
): (...args: A) => Promise<R | null> {
  let inFlight = false;
  return async (...args: A) => {
    if (inFlight) return null;
    inFlight = true;
    try {
      return await fn(...args);
    } finally {
      inFlight = false;
    }
  };
}
