import datetime
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

from lfdeblur.core.config import LOG_DIR
from lfdeblur.core.logger import get_logger

logger = get_logger(__name__)


def log_run(
    subcommand: str,
    config: Dict[str, Any],
    result: Optional[Dict[str, Any]] = None,
    error: Optional[str] = None,
    exit_code: int = 0,
    log_dir: Union[str, Path] = LOG_DIR,
) -> str:
    """
    Write a JSON record of one CLI invocation.

    Args:
        subcommand: CLI subcommand that ran (e.g. 'synth', 'train')
        config: Fully resolved configuration of the run
        result: Optional summary of what the run produced
        error: Optional error message if the run failed
        exit_code: Exit code reported to the shell
        log_dir: Directory receiving the records

    Returns:
        Path to the record file, or "" if it could not be written
    """
    try:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S_%f")
        file_path = log_dir / f"{subcommand}_{timestamp}.json"

        record = {
            "timestamp": datetime.datetime.now().isoformat(),
            "subcommand": subcommand,
            "config": config,
            "exit_code": exit_code,
            "success": error is None and exit_code == 0,
        }
        if error:
            record["error"] = error
        if result:
            record["result"] = result

        with open(file_path, "w") as f:
            json.dump(record, f, indent=2, default=str)

        logger.debug(f"Run record written to {file_path}")
        return str(file_path)

    except Exception as e:
        logger.error(f"Failed to write run record: {str(e)}")
        return ""
