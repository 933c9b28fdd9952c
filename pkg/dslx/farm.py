"""
Fan independent runs out over worker processes.

A run function takes one work item and must be picklable (module level).
Results come back in item order, so output files do not depend on the number
of jobs; randomness inside a run comes from `utils.run_rng(seed, run_id)`.
"""
import multiprocessing

from .logx import logx


def chunk_size(num_items, jobs):
    """A few chunks per worker keeps the pool busy without tiny tasks."""
    return max(1, num_items // (jobs * 4))


def farm_map(run_fn, items, jobs=1, progress=None, initializer=None,
             initargs=()):
    """
    Ordered map of `run_fn` over `items` on `jobs` processes (in-process when
    jobs == 1). `initializer(*initargs)` runs once per worker, which is how
    large shared objects such as a trained network reach the workers.
    `progress`, if set, logs every that-many finished items.
    """
    items = list(items)
    results = []
    if jobs <= 1 or len(items) <= 1:
        if initializer is not None:
            initializer(*initargs)
        iterator = map(run_fn, items)
        pool = None
    else:
        pool = multiprocessing.Pool(processes=jobs, initializer=initializer,
                                    initargs=initargs)
        iterator = pool.imap(run_fn, items,
                             chunksize=chunk_size(len(items), jobs))
    try:
        for idx, result in enumerate(iterator, start=1):
            results.append(result)
            if progress and idx % progress == 0:
                logx.msg('{}/{} runs done'.format(idx, len(items)))
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return results
