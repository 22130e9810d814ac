import asyncio
import itertools
import logging
import os
import sys
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, TextIO

from dotenv import load_dotenv

from cli.gns_commands import EXIT_OK, CommandOptions, ScanTask, evaluate_row, scan_tasks
from cli.gns_config import Config, get_log_level, get_workers, load_config, resolve_engine

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_PER_WORKER = 4


def read_checkpoint(path: Optional[str]) -> int:
    """Index of the first row still to run."""
    if not path or not os.path.exists(path):
        return 0
    with open(path) as fh:
        text = fh.read().strip()
    if not text:
        return 0
    return int(text) + 1


def write_checkpoint(path: Optional[str], index: int):
    if not path:
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(f"{index}\n")
    os.replace(tmp, path)


def _commit(sink: TextIO, line: str, checkpoint: Optional[str], index: int):
    sink.write(line + "\n")
    sink.flush()
    write_checkpoint(checkpoint, index)


async def run_scan(
    tasks: Iterable[ScanTask],
    evaluate: Callable[[ScanTask], str],
    workers: int,
    sink: TextIO,
    checkpoint: Optional[str] = None,
) -> int:
    """Evaluate rows, possibly in parallel, and write them in row order."""
    written = 0
    if workers <= 1:
        for task in tasks:
            _commit(sink, evaluate(task), checkpoint, task.index)
            written += 1
            await asyncio.sleep(0)
        return written

    loop = asyncio.get_running_loop()
    pool = ProcessPoolExecutor(max_workers=workers)
    try:
        queue = iter(tasks)
        pending = deque(
            (task, loop.run_in_executor(pool, evaluate, task))
            for task in itertools.islice(queue, workers * DEFAULT_WINDOW_PER_WORKER)
        )
        while pending:
            task, future = pending.popleft()
            line = await future
            _commit(sink, line, checkpoint, task.index)
            written += 1
            nxt = next(queue, None)
            if nxt is not None:
                pending.append((nxt, loop.run_in_executor(pool, evaluate, nxt)))
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
    return written


async def scan_config(config: Config, options: CommandOptions) -> int:
    scan = config.scan
    settings = resolve_engine(config.engine, options.precision_bits, options.step_cap)
    workers = options.workers or get_workers()
    checkpoint = options.checkpoint or scan.checkpoint
    start = read_checkpoint(checkpoint)
    tasks = (t for t in scan_tasks(config, settings, options.format) if t.index >= start)

    if start:
        logger.info(f"Resuming scan at row {start} from checkpoint {checkpoint}")
    logger.info(f"Scan command={scan.command}, workers={workers}")

    sink = options.out
    if scan.output:
        sink = open(scan.output, "a" if start else "w")
    try:
        written = await run_scan(tasks, evaluate_row, workers, sink, checkpoint)
    except (KeyboardInterrupt, asyncio.CancelledError):
        logger.info(f"Scan interrupted, completed rows are flushed and checkpointed in {checkpoint}")
        raise
    finally:
        if sink is not options.out:
            sink.close()
    logger.info(f"Scan finished: {written} rows")
    return EXIT_OK


async def main():
    if len(sys.argv) != 2:
        logger.error("usage: python worker.py <scan-config.toml>")
        return 1
    try:
        config = load_config(sys.argv[1])
        if config.scan is None:
            logger.error(f"{sys.argv[1]} has no [scan] section")
            return 1
        return await scan_config(config, CommandOptions(format="records"))
    except KeyboardInterrupt:
        logger.info("Scan stopped by user")
        return 1
    except Exception as e:
        logger.error(f"Error running scan: {e}", exc_info=True)
        raise


if __name__ == "__main__":
    logging.basicConfig(
        level=get_log_level(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    sys.exit(asyncio.run(main()))
