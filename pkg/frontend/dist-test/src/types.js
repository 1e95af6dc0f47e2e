/** Payload shapes of the review server's JSON API. */
export const QUALITY_KEYS = {
    "1": "Incorrect",
    "2": "Somewhat Correct",
    "3": "Almost Perfect",
    "4": "Perfect",
    "0": "No Description",
    "5": "I Can't Tell",
};
export const DIFFICULTY_KEYS = {
    "1": "Easy",
    "2": "Medium",
    "3": "Hard",
    "4": "Very Hard",
};
